#include "mlasce/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

#include "mlasce/errors.hpp"

namespace mlasce {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_level(int l, int L) {
  if (l < 1 || l > L) throw ParameterError("toy simulator: level out of range");
}

}  // namespace

double xi(double x, double a, double lambda) {
  const double r = std::abs(x - a);
  const double s = std::sqrt(5.0) * r / lambda;
  return (1.0 + s + 5.0 * r * r / (3.0 * lambda * lambda)) * std::exp(-s);
}

double xi2(double x, double a) {
  const double w = kPi / 8.0;
  const double u = x - a;
  if (std::abs(u) >= w) return 0.0;
  return std::exp(-1.0 / (w * w - u * u));
}

double xi3(double x, double a) {
  const double u = x - a;
  return 0.3 * std::exp(-8.0 * u * u) * (1.0 - std::pow(std::abs(u), 5));
}

double xi4(double x, double a) {
  const double u = x - a;
  return 0.3 * std::exp(-8.0 * u * u) * (1.0 - std::pow(std::abs(u), 3));
}

double xi5(double x, double a) {
  const double u = x - a;
  const double g = std::exp(-12.0 * u * u);
  if (x <= a - 1.0) return 0.0;
  if (x <= a) return 0.15 * g * (u + 1.0) * (u + 1.0);
  if (x <= a + 1.0) return 0.3 * g * (1.0 - 0.5 * (u - 1.0) * (u - 1.0));
  return 0.3 * g;
}

double toy3_f(int l, double x) {
  check_level(l, 3);
  double y = std::sin(x);
  if (l >= 2) y += xi(x, kPi / 3.0, 0.4);
  if (l >= 3) y += -0.5 * xi(x, kPi / 4.0, 0.2) + 0.5 * xi(x, 3.0 * kPi / 4.0, 0.2);
  return y;
}

double toy5_f(int l, double x) {
  check_level(l, 5);
  double y = std::sin(x);
  if (l >= 2) y += xi2(x, kPi / 6.0) + xi2(x, 5.0 * kPi / 6.0);
  if (l >= 3) y += -xi3(x, kPi / 4.0) - xi3(x, 3.0 * kPi / 4.0);
  if (l >= 4) y += xi4(x, kPi / 3.0) + xi4(x, 2.0 * kPi / 3.0);
  if (l >= 5) y += xi5(x, kPi / 8.0) - xi5(x, 4.0 * kPi / 8.0) + xi5(x, 7.0 * kPi / 8.0);
  return y;
}

double ToySuite::f(int l, double x) const { return levels == 3 ? toy3_f(l, x) : toy5_f(l, x); }

FidelityLadder ToySuite::ladder() const {
  FidelityLadder out;
  out.domain = domain;
  for (int l = 1; l <= levels; ++l) {
    FidelityLevel lv;
    lv.simulator = [this_levels = levels, l](const Eigen::VectorXd& x) {
      return this_levels == 3 ? toy3_f(l, x(0)) : toy5_f(l, x(0));
    };
    lv.cost = f_costs[static_cast<std::size_t>(l - 1)];
    lv.accuracy = std::ldexp(1.0, 1 - l);
    out.levels.push_back(std::move(lv));
  }
  return out;
}

ToySuite toy_suite(const std::string& name) {
  ToySuite s;
  s.name = name;
  if (name == "toy3") {
    s.levels = 3;
    s.f_costs = {4, 16, 64};
    s.h_costs = {4, 20, 80};
    s.nu.assign(3, Smoothness::FiveHalves);
    s.baseline_proportions = {8, 4, 1};
  } else if (name == "toy5") {
    s.levels = 5;
    s.f_costs = {0.5, 2, 8, 32, 128};
    s.h_costs = {0.5, 2.5, 10, 40, 160};
    s.nu = {Smoothness::SevenHalves, Smoothness::FiveHalves, Smoothness::FiveHalves, Smoothness::ThreeHalves,
            Smoothness::ThreeHalves};
    s.baseline_proportions = {16, 8, 4, 2, 1};
  } else {
    throw ParameterError("unknown suite '" + name + "' (expected toy3 or toy5)");
  }
  return s;
}

std::vector<double> xi5_breakpoint_jumps(double a) {
  std::vector<double> out;
  for (const double b : {a - 1.0, a, a + 1.0}) {
    const double right = std::nextafter(b, std::numeric_limits<double>::infinity());
    out.push_back(xi5(right, a) - xi5(b, a));
  }
  return out;
}

double l2_error(const std::function<double(double)>& predict, const std::function<double(double)>& truth, double lo,
                double hi, int n_points) {
  if (n_points < 2) throw ParameterError("l2_error: need at least two quadrature points");
  if (!(hi > lo)) throw ParameterError("l2_error: empty interval");
  const double h = (hi - lo) / (n_points - 1);
  double sum = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const double x = i == n_points - 1 ? hi : lo + h * i;
    const double e = predict(x) - truth(x);
    sum += (i == 0 || i == n_points - 1 ? 0.5 : 1.0) * e * e;
  }
  return sum * h;
}

Ar1CoKriging::Ar1CoKriging(std::vector<GPModel> models, std::vector<double> rho)
    : models_(std::move(models)), rho_(std::move(rho)) {}

Ar1CoKriging Ar1CoKriging::fit(const std::vector<PointSet>& designs, const std::vector<Eigen::VectorXd>& outputs,
                               Smoothness nu, double nugget, std::uint64_t seed, int fit_starts) {
  const std::size_t L = designs.size();
  if (L == 0 || outputs.size() != L) throw ShapeError("ar1: one design and one output vector per level");
  for (std::size_t l = 0; l < L; ++l)
    if (designs[l].rows() != outputs[l].size() || designs[l].rows() == 0)
      throw ShapeError("ar1: design and output sizes differ");

  const PointSet& base = designs[0];
  const double diameter = (base.colwise().maxCoeff() - base.colwise().minCoeff()).norm();
  std::mt19937_64 rng(seed);
  auto fit_level = [&](const PointSet& X, const Eigen::VectorXd& y) {
    return mlasce::fit(X, y, nu, nugget, FitOptions{diameter, fit_starts, rng()});
  };

  std::vector<GPModel> models;
  std::vector<double> rho;
  models.push_back(fit_level(designs[0], outputs[0]));
  for (std::size_t l = 1; l < L; ++l) {
    const PointSet& X = designs[l];
    const PointSet& P = designs[l - 1];
    if (X.cols() != P.cols()) throw ShapeError("ar1: designs differ in dimension");
    Eigen::VectorXd prev(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      Eigen::Index match = -1;
      for (Eigen::Index j = 0; j < P.rows() && match < 0; ++j)
        if ((P.row(j) - X.row(i)).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + X.row(i).cwiseAbs().maxCoeff())) match = j;
      if (match < 0) throw ParameterError("ar1: designs are not nested across levels");
      prev(i) = outputs[l - 1](match);
    }
    const double denom = prev.squaredNorm();
    const double r = denom > 0.0 ? prev.dot(outputs[l]) / denom : 0.0;
    rho.push_back(r);
    models.push_back(fit_level(X, outputs[l] - r * prev));
  }
  return Ar1CoKriging(std::move(models), std::move(rho));
}

PosteriorPoint Ar1CoKriging::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  PosteriorPoint out = models_[0].posterior(x);
  for (std::size_t l = 1; l < models_.size(); ++l) {
    const PosteriorPoint p = models_[l].posterior(x);
    const double r = rho_[l - 1];
    out.mean = r * out.mean + p.mean;
    out.var = r * r * out.var + p.var;
  }
  return out;
}

std::vector<Eigen::Index> baseline_counts(const ToySuite& suite, double budget) {
  const auto L = static_cast<std::size_t>(suite.levels);
  double unit = 0.0;
  for (std::size_t l = 0; l < L; ++l) unit += suite.baseline_proportions[l] * suite.f_costs[l];
  const double k = budget / unit;
  std::vector<Eigen::Index> n(L);
  double spent = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    n[l] = static_cast<Eigen::Index>(std::floor(k * suite.baseline_proportions[l] + 1e-9));
    spent += static_cast<double>(n[l]) * suite.f_costs[l];
  }
  if (n[L - 1] < 1) return {};
  // spend what is left from the top level down, never breaking n_1 >= ... >= n_L
  for (bool added = true; added;) {
    added = false;
    for (std::size_t l = L; l-- > 0;) {
      const bool nested_ok = l == 0 || n[l] + 1 <= n[l - 1];
      if (nested_ok && spent + suite.f_costs[l] <= budget + 1e-9) {
        ++n[l];
        spent += suite.f_costs[l];
        added = true;
        break;
      }
    }
  }
  return n;
}

std::vector<PointSet> nested_designs(const Domain& domain, const std::vector<Eigen::Index>& counts,
                                     std::uint64_t seed) {
  if (counts.empty()) throw ParameterError("nested_designs: no levels");
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (counts[l] < 1) throw ParameterError("nested_designs: counts must be >= 1");
    if (l > 0 && counts[l] > counts[l - 1]) throw ParameterError("nested_designs: counts must be non-increasing");
  }
  std::vector<PointSet> out;
  if (counts[0] == 1) {
    out.emplace_back(0.5 * (domain.lower + domain.upper).transpose());
  } else {
    out.push_back(generate_grid(domain, counts[0], seed, GridMode::Stratified).grid);
  }
  const Eigen::VectorXd centre = 0.5 * (domain.lower + domain.upper);
  for (std::size_t l = 1; l < counts.size(); ++l) {
    const PointSet& P = out.back();
    const Eigen::Index m = P.rows();
    // greedy maximin: start nearest the centre, then repeatedly take the point farthest from the chosen ones
    std::vector<double> dist(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
    std::vector<bool> taken(static_cast<std::size_t>(m), false);
    std::vector<Eigen::Index> chosen;
    Eigen::Index next = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = (P.row(j).transpose() - centre).norm();
      if (d < best) {
        best = d;
        next = j;
      }
    }
    while (static_cast<Eigen::Index>(chosen.size()) < counts[l]) {
      chosen.push_back(next);
      taken[static_cast<std::size_t>(next)] = true;
      double far = -1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        auto& dj = dist[static_cast<std::size_t>(j)];
        dj = std::min(dj, (P.row(j) - P.row(next)).norm());
        if (!taken[static_cast<std::size_t>(j)] && dj > far) {
          far = dj;
          next = j;
        }
      }
    }
    std::sort(chosen.begin(), chosen.end());
    PointSet S(counts[l], P.cols());
    for (std::size_t i = 0; i < chosen.size(); ++i) S.row(static_cast<Eigen::Index>(i)) = P.row(chosen[i]);
    out.push_back(std::move(S));
  }
  return out;
}

std::string to_string(BenchMethod method) {
  switch (method) {
    case BenchMethod::Mlasce: return "mlasce";
    case BenchMethod::MlasceFixed: return "mlasce-fixed";
    case BenchMethod::Ar1: return "ar1";
  }
  return "unknown";
}

BenchMethod bench_method_from_string(const std::string& name) {
  if (name == "mlasce") return BenchMethod::Mlasce;
  if (name == "mlasce-fixed") return BenchMethod::MlasceFixed;
  if (name == "ar1") return BenchMethod::Ar1;
  throw ParameterError("unknown method '" + name + "' (expected mlasce, mlasce-fixed or ar1)");
}

ExperimentResult run_experiment(const ToySuite& suite, BenchMethod method, double budget, std::uint64_t seed,
                                const BenchOptions& opts) {
  ExperimentResult res;
  res.suite = suite.name;
  res.method = method;
  res.budget = budget;
  res.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  const double lo = suite.domain.lower(0), hi = suite.domain.upper(0);
  auto truth = [&](double x) { return suite.truth(x); };

  if (method == BenchMethod::Ar1) {
    const auto counts = baseline_counts(suite, budget);
    if (counts.empty()) {
      res.skipped = true;
      res.note = "budget too small for one run at the top level";
      return res;
    }
    const auto designs = nested_designs(suite.domain, counts, mix_seed(seed, 1));
    std::vector<Eigen::VectorXd> outputs;
    for (int l = 1; l <= suite.levels; ++l) {
      const PointSet& X = designs[static_cast<std::size_t>(l - 1)];
      Eigen::VectorXd y(X.rows());
      for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = suite.f(l, X(i, 0));
      outputs.push_back(std::move(y));
      res.spent += static_cast<double>(X.rows()) * suite.f_costs[static_cast<std::size_t>(l - 1)];
    }
    const Ar1CoKriging model =
        Ar1CoKriging::fit(designs, outputs, Smoothness::FiveHalves, 1e-8, mix_seed(seed, 2), opts.fit_starts);
    res.l2_error = l2_error([&](double x) { return model.predict(Eigen::VectorXd::Constant(1, x)).mean; }, truth, lo,
                            hi);
    res.counts = counts;
  } else {
    MlasceOptions mo;
    mo.seed = seed;
    mo.n_grid = opts.n_grid;
    mo.fit_starts = opts.fit_starts;
    mo.nu = method == BenchMethod::Mlasce ? suite.nu
                                          : std::vector<Smoothness>(static_cast<std::size_t>(suite.levels),
                                                                    Smoothness::FiveHalves);
    try {
      const MultilevelEmulator em = mlasce_run(suite.ladder(), budget, mo);
      res.l2_error = l2_error([&](double x) { return em.predict(Eigen::VectorXd::Constant(1, x)).mean; }, truth,
                              lo, hi);
      res.spent = em.spent();
      res.counts = em.counts();
      res.ledger_ok = audit_ledger(em).ok && em.spent() <= budget * (1.0 + 1e-12);
    } catch (const BudgetError& e) {
      res.skipped = true;
      res.note = e.what();
      return res;
    }
  }
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::vector<ExperimentResult> run_suite(const ToySuite& suite, const std::vector<BenchMethod>& methods,
                                        const std::vector<double>& budgets, const std::vector<std::uint64_t>& seeds,
                                        const BenchOptions& opts) {
  struct Cell {
    BenchMethod method;
    double budget;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto m : methods)
    for (const double b : budgets)
      for (const auto s : seeds) cells.push_back({m, b, s});

  std::vector<ExperimentResult> out(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        out[i] = run_experiment(suite, cells[i].method, cells[i].budget, cells[i].seed, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto n_workers =
      std::min<std::size_t>(cells.size(), opts.workers > 0 ? static_cast<std::size_t>(opts.workers) : hw);
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_results_csv(std::ostream& os, const ToySuite& suite, const std::vector<ExperimentResult>& rows) {
  os << "suite,method,budget,seed,l2_error";
  for (int l = 1; l <= suite.levels; ++l) os << ",n_" << l;
  os << ",wall_ms\n";
  const auto old_precision = os.precision(17);
  for (const auto& r : rows) {
    os << r.suite << ',' << to_string(r.method) << ',' << r.budget << ',' << r.seed << ',';
    if (!r.skipped) os << r.l2_error;
    for (int l = 0; l < suite.levels; ++l) {
      os << ',';
      if (static_cast<std::size_t>(l) < r.counts.size()) os << r.counts[static_cast<std::size_t>(l)];
    }
    os << ',' << std::llround(r.wall_ms) << '\n';
  }
  os.precision(old_precision);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ParameterError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace mlasce
