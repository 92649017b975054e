#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mlasce/bench.hpp"
#include "mlasce/errors.hpp"
#include "mlasce/multilevel.hpp"
#include "oracle.hpp"

using namespace mlasce;

namespace {

Eigen::VectorXd point(double x) { return Eigen::VectorXd::Constant(1, x); }

PointSet column(std::initializer_list<double> v) {
  PointSet X(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) X(i++, 0) = x;
  return X;
}

LevelState level_state(std::size_t l, const PointSet& X, const Eigen::VectorXd& y, const KernelSpec& spec) {
  return LevelState{l, 1.0, 1.0, 200, GPModel(X, y, spec), 0.0, 0.0, 0.0};
}

const Domain kUnit = Domain::interval(0.0, std::numbers::pi);

}  // namespace

TEST_CASE("score from two norms") {
  CHECK(score(0.0, 0.0, 4.0, 4.0) == 0.0);
  CHECK(score(2.0, 5.0, 16.0, 20.0) == doctest::Approx(3.0 * 16.0 / 20.0));
  CHECK(score(5.0, 2.0, 16.0, 20.0) == doctest::Approx(3.0 * 16.0 / 20.0));
  CHECK_THROWS_AS(score(0, 1, 1, 0), ParameterError);
  CHECK_THROWS_AS(score(0, 1, -1, 1), ParameterError);
}

TEST_CASE("one-point level score") {
  const double delta = 0.7, sigma2 = 2.0;
  const GPModel m(column({1.0}), Eigen::VectorXd::Constant(1, delta), {Smoothness::FiveHalves, 1.0, sigma2, 0.0});
  CHECK(score(0.0, score_norm(m, ScoreNorm::KernelScaled), 16, 20) == doctest::Approx(delta * delta / sigma2 * 0.8));
  CHECK(score(0.0, score_norm(m, ScoreNorm::UnitVariance), 16, 20) == doctest::Approx(delta * delta * 0.8));
}

TEST_CASE("score sequence matches dense recomputation") {
  const PointSet X = column({0.3, 1.9, 2.6});
  const Eigen::VectorXd y = (Eigen::VectorXd(3) << 0.4, -0.9, 0.2).finished();
  const double lambdas[] = {0.8, 0.6, 0.5}, sigmas[] = {0.16, 0.5, 0.45};
  double prev_k = 0, prev_u = 0;
  for (int n = 1; n <= 3; ++n) {
    const GPModel m(X.topRows(n), y.head(n), {Smoothness::FiveHalves, lambdas[n - 1], sigmas[n - 1], 1e-8});
    const oracle::Gp ref{X.topRows(n), y.head(n), 2.5, lambdas[n - 1], sigmas[n - 1], 1e-8};
    const double k_norm = ref.norm_sq(), u_norm = ref.norm_sq() * sigmas[n - 1];
    CHECK(score(prev_k, score_norm(m, ScoreNorm::KernelScaled), 4, 4) == doctest::Approx(std::abs(k_norm - prev_k)).epsilon(1e-10));
    CHECK(score(prev_u, score_norm(m, ScoreNorm::UnitVariance), 4, 4) == doctest::Approx(std::abs(u_norm - prev_u)).epsilon(1e-10));
    prev_k = k_norm;
    prev_u = u_norm;
  }
}

TEST_CASE("kernel-scaled norm is the sample size at an interior likelihood optimum") {
  const GPModel m = fit(column({0.1, 0.8, 1.5, 2.2, 2.9}), (Eigen::VectorXd(5) << 0.1, 0.7, 1.0, 0.6, 0.2).finished(),
                        Smoothness::FiveHalves, 1e-8, {std::numbers::pi, 8, 1});
  CHECK(score_norm(m, ScoreNorm::KernelScaled) == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("increment simulators and ladder validation") {
  const ToySuite s = toy_suite("toy3");
  const auto inc = increment_simulators(s.ladder());
  REQUIRE(inc.size() == 3);
  CHECK(inc[0].cost_per_eval == 4);
  CHECK(inc[1].cost_per_eval == 20);
  CHECK(inc[2].cost_per_eval == 80);
  const double x = 1.1;
  CHECK(inc[1].eval(point(x)) == doctest::Approx(toy3_f(2, x) - toy3_f(1, x)).epsilon(1e-15));

  FidelityLadder bad = s.ladder();
  bad.levels[2].cost = 10;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = s.ladder();
  bad.levels[1].accuracy = 2;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("budget equal to the initial design gives one point per level") {
  const ToySuite s = toy_suite("toy3");
  MlasceOptions o;
  o.seed = 4;
  const MultilevelEmulator em = mlasce_run(s.ladder(), 104.0, o);
  CHECK(em.counts() == std::vector<Eigen::Index>{1, 1, 1});
  CHECK(em.ledger().size() == 3);
  CHECK(em.spent() == 104.0);
  CHECK_THROWS_AS(mlasce_run(s.ladder(), 103.0, o), BudgetError);
}

TEST_CASE("small toy budget favours the cheap level and stays within budget") {
  const ToySuite s = toy_suite("toy3");
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    MlasceOptions o;
    o.seed = seed;
    const MultilevelEmulator em = mlasce_run(s.ladder(), 340.0, o);
    CHECK(em.spent() <= 340.0);
    CHECK(340.0 - em.spent() < 4.0);
    CHECK(em.counts()[0] > em.counts()[2]);
    CHECK(audit_ledger(em).ok);
  }
}

TEST_CASE("two identical levels walk through the same states") {
  const Simulator f = [](const Eigen::VectorXd& x) { return std::sin(2 * x(0)) + 0.3; };
  const std::vector<IncrementSimulator> inc{{0, f, 5.0}, {1, f, 5.0}};
  MlasceOptions o;
  o.level_seeds = {11, 11};
  const MultilevelEmulator em = mlasce_run(inc, kUnit, 200.0, o);
  const auto c = em.counts();
  CHECK(c[0] + c[1] == 40);
  // the first decision is a tie and goes to the lower level
  REQUIRE(em.ledger().size() > 2);
  CHECK(em.ledger()[2].level == 0);
  CHECK(c[0] >= c[1]);
  // the twin is a prefix of the favoured level: same points, same fits
  const GPModel& m0 = em.levels()[0].model;
  const GPModel& m1 = em.levels()[1].model;
  CHECK(m0.inputs().topRows(m1.size()) == m1.inputs());
  std::vector<const LedgerEntry*> e0, e1;
  for (const auto& e : em.ledger()) (e.level == 0 ? e0 : e1).push_back(&e);
  for (std::size_t k = 0; k < e1.size(); ++k) {
    CHECK(e1[k]->lambda == e0[k]->lambda);
    CHECK(e1[k]->sigma2 == e0[k]->sigma2);
  }
  // scores are not monotone under refitting, so a stalled twin can be
  // overtaken for good and the split need not be even
  CHECK(audit_ledger(em).ok);
}

TEST_CASE("ledger replay, determinism and independence") {
  const ToySuite s = toy_suite("toy3");
  MlasceOptions o;
  o.seed = 8;
  const MultilevelEmulator a = mlasce_run(s.ladder(), 420.0, o);
  const MultilevelEmulator b = mlasce_run(s.ladder(), 420.0, o);
  const LedgerAudit audit = audit_ledger(a);
  CHECK_MESSAGE(audit.ok, audit.message);
  CHECK(audit.picks_checked == a.ledger().size() - 3);
  REQUIRE(a.ledger().size() == b.ledger().size());
  for (std::size_t i = 0; i < a.ledger().size(); ++i) {
    CHECK(a.ledger()[i].level == b.ledger()[i].level);
    CHECK(a.ledger()[i].x == b.ledger()[i].x);
    CHECK(a.ledger()[i].value == b.ledger()[i].value);
  }
  double spent = 0;
  for (const auto& e : a.ledger()) {
    spent += e.cost;
    CHECK(spent <= 420.0);
  }
  // each level draws its own grid and initial point
  CHECK(a.levels()[0].model.inputs().row(0) != a.levels()[1].model.inputs().row(0));
}

TEST_CASE("a tampered ledger fails the audit") {
  const ToySuite s = toy_suite("toy3");
  MlasceOptions o;
  o.seed = 2;
  const MultilevelEmulator em = mlasce_run(s.ladder(), 420.0, o);
  auto ledger = em.ledger();
  auto& last = ledger.back();
  last.scores[last.level] *= 0.5;
  const MultilevelEmulator bad(em.domain(), em.budget(), em.norm(), em.levels(), ledger);
  CHECK_FALSE(audit_ledger(bad).ok);
  const MultilevelEmulator over(em.domain(), em.spent() - 1.0, em.norm(), em.levels(), em.ledger());
  CHECK_FALSE(audit_ledger(over).ok);
}

TEST_CASE("predict sums the level posteriors") {
  const KernelSpec s{Smoothness::FiveHalves, 0.5, 1.0, 1e-10};
  const PointSet X = column({0.5, 1.5});
  const Eigen::VectorXd d1 = (Eigen::VectorXd(2) << 1.0, 2.0).finished();
  const Eigen::VectorXd d2 = (Eigen::VectorXd(2) << -0.25, 0.5).finished();
  const MultilevelEmulator em(kUnit, 0.0, ScoreNorm::UnitVariance, {level_state(0, X, d1, s), level_state(1, X, d2, s)}, {});
  const auto p = em.predict(point(1.5));
  CHECK(p.mean == doctest::Approx(2.5).epsilon(1e-8));
  CHECK(p.var < 1e-8);

  const PointSet X2 = column({0.2, 2.8, 1.0});
  const Eigen::VectorXd d3 = (Eigen::VectorXd(3) << 0.3, 0.1, -0.6).finished();
  const KernelSpec s2{Smoothness::ThreeHalves, 0.9, 0.4, 1e-8};
  const MultilevelEmulator two(kUnit, 0.0, ScoreNorm::UnitVariance, {level_state(0, X, d1, s), level_state(1, X2, d3, s2)}, {});
  const oracle::Gp r1{X, d1, 2.5, 0.5, 1.0, 1e-10}, r2{X2, d3, 1.5, 0.9, 0.4, 1e-8};
  for (int i = 0; i < 30; ++i) {
    const Eigen::VectorXd x = point(0.1 * i);
    const auto q = two.predict(x);
    CHECK(q.mean == doctest::Approx(r1.mean(x) + r2.mean(x)).epsilon(1e-9));
    CHECK(std::abs(q.var - (std::max(0.0, r1.var(x)) + std::max(0.0, r2.var(x)))) < 1e-9);
    CHECK(q.var == two.levels()[0].model.posterior(x).var + two.levels()[1].model.posterior(x).var);
  }

  const MultilevelEmulator one(kUnit, 0.0, ScoreNorm::UnitVariance, {level_state(0, X2, d3, s2)}, {});
  const auto g = one.levels()[0].model.posterior(point(0.77));
  CHECK(one.predict(point(0.77)).mean == g.mean);
  CHECK(one.predict(point(0.77)).var == g.var);
}

TEST_CASE("error bound") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  const KernelSpec s{Smoothness::FiveHalves, 0.6, 1.0, 0.0};
  const PointSet Z = oracle::spread_points(rng, 4, 0.0, std::numbers::pi, 0.2);
  Eigen::VectorXd a(4);
  for (auto& v : a) v = gauss(rng);
  const auto delta = [&](double x) {
    double t = 0;
    for (int i = 0; i < 4; ++i) t += a(i) * matern(std::abs(x - Z(i, 0)), s);
    return t;
  };
  const double norm = std::sqrt(a.dot(cov_matrix(Z, s) * a));
  const PointSet X = column({0.0, 0.9, 1.7, 2.5, 3.1});
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) y(i) = delta(X(i, 0));
  KernelSpec fs = s;
  fs.nugget = 1e-10;
  const MultilevelEmulator em(kUnit, 0.0, ScoreNorm::UnitVariance, {level_state(0, X, y, fs)}, {});
  const std::vector<double> norms{norm}, doubled{2 * norm};
  CHECK(em.error_bound(point(0.9), norms) < 1e-4);
  for (int i = 0; i < 300; ++i) {
    const double x = std::numbers::pi * i / 299.0;
    const double bound = em.error_bound(point(x), norms);
    CHECK(bound + 1e-7 >= std::abs(em.predict(point(x)).mean - delta(x)));
    CHECK(em.error_bound(point(x), doubled) == doctest::Approx(2 * bound));
  }
  const ErrorBound est = em.error_bound(point(1.2));
  CHECK(est.lower_biased);
  CHECK(est.value <= em.error_bound(point(1.2), norms) + 1e-12);
  CHECK_THROWS_AS(em.error_bound(point(1.0), std::vector<double>{1.0, 1.0}), ShapeError);
  CHECK_THROWS_AS(em.error_bound(point(1.0), std::vector<double>{-1.0}), ParameterError);
}
