#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "mlasce/bench.hpp"
#include "mlasce/errors.hpp"

using namespace mlasce;

namespace {

constexpr double pi = std::numbers::pi;

double ref_xi(double x, double a, double l) {
  const double r = std::abs(x - a);
  return (1 + std::sqrt(5.0) / l * r + 5 * r * r / (3 * l * l)) * std::exp(-std::sqrt(5.0) / l * r);
}
double ref_xi2(double x, double a) {
  const double w = pi / 8;
  return std::abs(x - a) < w ? std::exp(-1 / (w * w - (x - a) * (x - a))) : 0.0;
}
double ref_xi3(double x, double a) { return 0.3 * std::exp(-8 * (x - a) * (x - a)) * (1 - std::pow(std::abs(x - a), 5)); }
double ref_xi4(double x, double a) { return 0.3 * std::exp(-8 * (x - a) * (x - a)) * (1 - std::pow(std::abs(x - a), 3)); }
double ref_xi5(double x, double a) {
  const double g = std::exp(-12 * (x - a) * (x - a));
  if (x > a - 1 && x <= a) return 0.15 * g * (x - a + 1) * (x - a + 1);
  if (x > a && x <= a + 1) return 0.3 * g * (1 - 0.5 * (x - a - 1) * (x - a - 1));
  if (x > a + 1) return 0.3 * g;
  return 0.0;
}
double ref_toy3(int l, double x) {
  double f = std::sin(x);
  if (l >= 2) f += ref_xi(x, pi / 3, 0.4);
  if (l >= 3) f += -0.5 * ref_xi(x, pi / 4, 0.2) + 0.5 * ref_xi(x, 3 * pi / 4, 0.2);
  return f;
}
double ref_toy5(int l, double x) {
  double f = std::sin(x);
  if (l >= 2) f += ref_xi2(x, pi / 6) + ref_xi2(x, 5 * pi / 6);
  if (l >= 3) f += -ref_xi3(x, pi / 4) - ref_xi3(x, 3 * pi / 4);
  if (l >= 4) f += ref_xi4(x, pi / 3) + ref_xi4(x, 2 * pi / 3);
  if (l >= 5) f += ref_xi5(x, pi / 8) - ref_xi5(x, 4 * pi / 8) + ref_xi5(x, 7 * pi / 8);
  return f;
}

PointSet column(std::initializer_list<double> v) {
  PointSet X(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) X(i++, 0) = x;
  return X;
}

bool rows_subset(const PointSet& small, const PointSet& big) {
  for (Eigen::Index i = 0; i < small.rows(); ++i) {
    bool found = false;
    for (Eigen::Index j = 0; j < big.rows() && !found; ++j) found = small.row(i) == big.row(j);
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("toy values") {
  CHECK(toy3_f(1, pi / 2) == 1.0);
  CHECK(toy3_f(2, pi / 3) - toy3_f(1, pi / 3) == doctest::Approx(1.0).epsilon(1e-15));
  for (int i = 0; i <= 1000; ++i) {
    const double x = pi * i / 1000;
    if (std::abs(x - pi / 6) >= pi / 8 && std::abs(x - 5 * pi / 6) >= pi / 8) CHECK(toy5_f(2, x) == toy5_f(1, x));
  }
}

TEST_CASE("toy ladders follow the closed forms") {
  double worst = 0;
  for (int i = 0; i <= 2000; ++i) {
    const double x = pi * i / 2000;
    for (int l = 1; l <= 3; ++l) worst = std::max(worst, std::abs(toy3_f(l, x) - ref_toy3(l, x)));
    for (int l = 1; l <= 5; ++l) worst = std::max(worst, std::abs(toy5_f(l, x) - ref_toy5(l, x)));
    worst = std::max(worst, std::abs(xi(x, 1.0, 0.4) - ref_xi(x, 1.0, 0.4)));
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("piecewise bump is continuous at its breakpoints") {
  for (double a : {pi / 8, pi / 2, 7 * pi / 8}) {
    const auto jumps = xi5_breakpoint_jumps(a);
    REQUIRE(jumps.size() == 3);
    for (double j : jumps) CHECK(std::abs(j) <= 1e-15);
    CHECK(xi5(a, a) == doctest::Approx(0.15));
  }
}

TEST_CASE("suites") {
  const ToySuite t3 = toy_suite("toy3");
  CHECK(t3.levels == 3);
  CHECK(t3.f_costs == std::vector<double>{4, 16, 64});
  CHECK(t3.h_costs == std::vector<double>{4, 20, 80});
  const ToySuite t5 = toy_suite("toy5");
  CHECK(t5.f_costs == std::vector<double>{0.5, 2, 8, 32, 128});
  CHECK(t5.h_costs == std::vector<double>{0.5, 2.5, 10, 40, 160});
  CHECK(t5.nu == std::vector<Smoothness>{Smoothness::SevenHalves, Smoothness::FiveHalves, Smoothness::FiveHalves,
                                         Smoothness::ThreeHalves, Smoothness::ThreeHalves});
  CHECK(t5.truth(0.7) == toy5_f(5, 0.7));
  CHECK_THROWS_AS(toy_suite("toy4"), ParameterError);
}

TEST_CASE("l2 error quadrature") {
  const auto sine = [](double x) { return std::sin(x); };
  CHECK(l2_error(sine, sine, 0, pi) == 0.0);
  CHECK(l2_error([](double x) { return std::sin(x) + 0.3; }, sine, 0, pi) == doctest::Approx(0.09 * pi).epsilon(1e-10));
  CHECK(std::abs(l2_error([](double x) { return 2 * std::sin(x); }, sine, 0, pi) - pi / 2) <= 1e-8);
}

TEST_CASE("co-kriging scale factor") {
  const PointSet X1 = column({0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
  const PointSet X2 = column({0.5, 1.5, 2.5});
  Eigen::VectorXd y1(7), y2(3), y2same(3);
  for (int i = 0; i < 7; ++i) y1(i) = std::sin(X1(i, 0)) + 0.2;
  for (int i = 0; i < 3; ++i) {
    y2(i) = 2 * (std::sin(X2(i, 0)) + 0.2);
    y2same(i) = std::sin(X2(i, 0)) + 0.2;
  }
  const Ar1CoKriging twice = Ar1CoKriging::fit({X1, X2}, {y1, y2});
  CHECK(twice.rho()[0] == doctest::Approx(2.0).epsilon(1e-10));

  const Ar1CoKriging same = Ar1CoKriging::fit({X1, X2}, {y1, y2same});
  CHECK(same.rho()[0] == doctest::Approx(1.0).epsilon(1e-10));
  for (double x : {0.3, 1.1, 2.9}) {
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, x);
    CHECK(same.predict(p).mean == doctest::Approx(same.residual_models()[0].posterior(p).mean).epsilon(1e-6));
  }
  CHECK_THROWS_AS(Ar1CoKriging::fit({X1, column({0.7})}, {y1, Eigen::VectorXd::Ones(1)}), ParameterError);
}

TEST_CASE("baseline designs are nested and within budget") {
  for (const char* name : {"toy3", "toy5"})
    for (double budget : {340.0, 500.0, 1150.0}) {
      const ToySuite s = toy_suite(name);
      const auto c = baseline_counts(s, budget);
      if (c.empty()) continue;
      double spent = 0;
      for (int l = 0; l < s.levels; ++l) {
        spent += static_cast<double>(c[l]) * s.f_costs[l];
        if (l > 0) CHECK(c[l] <= c[l - 1]);
        CHECK(c[l] >= 1);
      }
      CHECK(spent <= budget);
      const auto designs = nested_designs(s.domain, c, 3);
      for (int l = 1; l < s.levels; ++l) CHECK(rows_subset(designs[l], designs[l - 1]));
      std::set<double> distinct(designs[0].data(), designs[0].data() + designs[0].size());
      CHECK(static_cast<Eigen::Index>(distinct.size()) == c[0]);
    }
  const auto c = baseline_counts(toy_suite("toy3"), 500);
  CHECK(static_cast<double>(c[0]) / static_cast<double>(c[2]) >= 4);
}

TEST_CASE("experiment rows") {
  const ToySuite s = toy_suite("toy3");
  const std::vector<double> budgets{340, 380, 420, 460, 500};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  BenchOptions o;
  o.workers = 2;
  const auto rows = run_suite(s, {BenchMethod::Mlasce}, budgets, seeds, o);
  CHECK(rows.size() == 25);
  for (const auto& r : rows) {
    CHECK_FALSE(r.skipped);
    CHECK(r.spent <= r.budget);
    CHECK(r.ledger_ok);
    CHECK(std::isfinite(r.l2_error));
  }
  std::ostringstream os;
  write_results_csv(os, s, rows);
  std::string header;
  std::getline(std::istringstream(os.str()), header);
  CHECK(header == "suite,method,budget,seed,l2_error,n_1,n_2,n_3,wall_ms");

  CHECK(bench_method_from_string("mlasce-fixed") == BenchMethod::MlasceFixed);
  CHECK(to_string(BenchMethod::Ar1) == "ar1");
  CHECK_THROWS_AS(bench_method_from_string("kriging"), ParameterError);
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}
