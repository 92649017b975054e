#include "mlasce/external_simulator.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "mlasce/errors.hpp"

namespace mlasce {

namespace {

std::vector<double> coords(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

std::string describe(const std::string& out, const std::string& err) {
  std::string d;
  if (!out.empty()) d += "stdout: " + out;
  if (!err.empty()) d += (d.empty() ? "" : "\n") + std::string("stderr: ") + err;
  return d;
}

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe(fd) != 0) throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    for (int f : fd)
      if (f >= 0) ::close(f);
  }
  void close_end(int i) {
    if (fd[i] >= 0) ::close(fd[i]);
    fd[i] = -1;
  }
};

}  // namespace

double external_simulator_eval(const std::string& command, const Eigen::VectorXd& x, double timeout_s) {
  std::ostringstream line;
  line.precision(17);
  for (Eigen::Index i = 0; i < x.size(); ++i) line << (i ? " " : "") << x(i);
  line << '\n';
  const std::string input = line.str();

  Pipe in, out, err;
  const pid_t pid = ::fork();
  if (pid < 0) throw SimulatorError(std::string("fork failed: ") + std::strerror(errno), coords(x));
  if (pid == 0) {
    ::dup2(in.fd[0], STDIN_FILENO);
    ::dup2(out.fd[1], STDOUT_FILENO);
    ::dup2(err.fd[1], STDERR_FILENO);
    for (int f : {in.fd[0], in.fd[1], out.fd[0], out.fd[1], err.fd[0], err.fd[1]}) ::close(f);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  in.close_end(0);
  out.close_end(1);
  err.close_end(1);

  // a simulator that ignores its input may exit before we finish writing
  std::signal(SIGPIPE, SIG_IGN);
  for (std::size_t off = 0; off < input.size();) {
    const ssize_t n = ::write(in.fd[1], input.data() + off, input.size() - off);
    if (n <= 0) break;
    off += static_cast<std::size_t>(n);
  }
  in.close_end(1);

  std::string sout, serr;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  bool timed_out = false;
  pollfd fds[2] = {{out.fd[0], POLLIN, 0}, {err.fd[0], POLLIN, 0}};
  int open_streams = 2;
  char buf[4096];
  while (open_streams > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    const int r = ::poll(fds, 2, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) break;
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        (i == 0 ? sout : serr).append(buf, static_cast<std::size_t>(n));
      } else {
        fds[i].fd = -1;
        --open_streams;
      }
    }
  }
  if (timed_out) ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }

  if (timed_out) {
    std::ostringstream os;
    os << "simulator timed out after " << timeout_s << " s";
    throw SimulatorError(os.str(), coords(x), describe(sout, serr));
  }
  if (WIFSIGNALED(status))
    throw SimulatorError("simulator killed by signal " + std::to_string(WTERMSIG(status)), coords(x),
                         describe(sout, serr));
  if (WEXITSTATUS(status) != 0)
    throw SimulatorError("simulator exited with status " + std::to_string(WEXITSTATUS(status)), coords(x),
                         describe(sout, serr));

  std::istringstream is(sout);
  std::string token, extra;
  if (!(is >> token) || (is >> extra))
    throw SimulatorError("simulator output is not a single number", coords(x), describe(sout, serr));
  char* end = nullptr;
  const double y = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || !std::isfinite(y))
    throw SimulatorError("simulator output is not a finite number", coords(x), describe(sout, serr));
  return y;
}

}  // namespace mlasce
