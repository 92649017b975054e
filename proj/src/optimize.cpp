#include "mlasce/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mlasce/errors.hpp"

namespace mlasce {

namespace {

double finite_or_inf(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

OptimResult nelder_mead_box(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const NelderMeadOptions& opts) {
  const Eigen::Index n = start.size();
  if (lower.size() != n || upper.size() != n) throw ShapeError("nelder_mead_box: bound size mismatch");
  if ((upper.array() < lower.array()).any()) throw ParameterError("nelder_mead_box: empty box");

  const Eigen::VectorXd width = (upper - lower).cwiseMax(1e-300);
  auto project = [&](Eigen::VectorXd x) { return x.cwiseMax(lower).cwiseMin(upper); };

  OptimResult out;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++out.evals;
    return finite_or_inf(f(x));
  };

  std::vector<Eigen::VectorXd> simplex(n + 1);
  std::vector<double> values(n + 1);
  simplex[0] = project(start);
  values[0] = eval(simplex[0]);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = simplex[0];
    double step = opts.initial_step * width(i);
    if (v(i) + step > upper(i)) step = -step;
    v(i) += step;
    simplex[i + 1] = project(v);
    values[i + 1] = eval(simplex[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  while (out.evals < opts.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 1; i <= static_cast<std::size_t>(n); ++i)
      diameter = std::max(diameter, ((simplex[order[i]] - simplex[best]).array() / width.array()).abs().maxCoeff());
    const double spread = std::abs(values[worst] - values[best]);
    if (diameter < opts.x_tol ||
        (std::isfinite(values[worst]) && spread <= opts.f_tol * (std::abs(values[best]) + 1e-300)))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) centroid += simplex[order[i]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = project(centroid + (centroid - simplex[worst]));
    const double f_reflected = eval(reflected);
    if (f_reflected < values[best]) {
      const Eigen::VectorXd expanded = project(centroid + 2.0 * (centroid - simplex[worst]));
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    const Eigen::VectorXd contracted =
        outside ? project(centroid + 0.5 * (reflected - centroid)) : project(centroid + 0.5 * (simplex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < std::min(f_reflected, values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    // shrink towards the best vertex
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
      if (i == best) continue;
      simplex[i] = project(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
      values[i] = eval(simplex[i]);
    }
  }

  const auto it = std::min_element(values.begin(), values.end());
  out.x = simplex[static_cast<std::size_t>(it - values.begin())];
  out.value = *it;
  return out;
}

OptimResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                           int max_iter) {
  if (hi < lo) throw ParameterError("golden_section: empty interval");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  OptimResult out;
  auto eval = [&](double x) {
    ++out.evals;
    return finite_or_inf(f(x));
  };
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = eval(c), fd = eval(d);
  for (int it = 0; it < max_iter && (b - a) > tol * (std::abs(a) + std::abs(b) + 1e-300); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
    }
  }
  // the endpoints are candidates too; golden section never evaluates them
  const double fa = eval(lo), fb = eval(hi);
  double xbest = fc <= fd ? c : d, fbest = std::min(fc, fd);
  if (fa < fbest) { xbest = lo; fbest = fa; }
  if (fb < fbest) { xbest = hi; fbest = fb; }
  out.x = Eigen::VectorXd::Constant(1, xbest);
  out.value = fbest;
  return out;
}

}  // namespace mlasce
