#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "plsivc/errors.hpp"
#include "plsivc/tuning.hpp"

using namespace plsivc;

namespace {

// y = theta^T U + c * z: every fold fits it exactly.
Dataset constant_link(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Dataset ds;
  ds.u = Eigen::MatrixXd::NullaryExpr(n, 2, [&] { return z(rng); });
  ds.x = Eigen::MatrixXd::NullaryExpr(n, 3, [&] { return z(rng); });
  ds.z = Eigen::MatrixXd::NullaryExpr(n, 1, [&] { return z(rng); });
  ds.y = ds.u * Eigen::Vector2d(1.5, -0.5) + 2.0 * ds.z.col(0);
  return ds;
}

Dataset small_model(Eigen::Index n, std::uint64_t seed) {
  const auto ex = fixture::exact_spline(n, 1, 3, seed, 3, 3, 2);
  Dataset ds = ex.data;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0.0, 0.3);
  for (Eigen::Index i = 0; i < n; ++i) ds.y(i) += e(rng);
  return ds;
}

}  // namespace

TEST_SUITE("tuning") {

TEST_CASE("default knot grid") {
  CHECK(default_knot_grid(200) == std::vector<int>{1, 2, 3, 4});
  CHECK(default_knot_grid(243) == std::vector<int>{2, 3, 4, 5});
  CHECK(default_knot_grid(31) == std::vector<int>{1, 2, 3});
  CHECK(default_knot_grid(1024) == std::vector<int>{3, 4, 5, 6});
}

TEST_CASE("log-spaced lambda grid") {
  const auto g = log_lambda_grid(0.5);
  REQUIRE(g.size() == 20);
  CHECK(g.front() == doctest::Approx(5e-4));
  CHECK(g.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(2000.0, 1.0 / 19)));
  }
  CHECK_THROWS_AS(log_lambda_grid(0.0), ConfigError);
}

TEST_CASE("adaptive lambdas") {
  FitResult unpen;
  unpen.phi = IndexParam((Eigen::VectorXd(2) << 0.25, 0.0).finished());
  unpen.coef.theta = (Eigen::VectorXd(2) << 0.5, -2.0).finished();
  unpen.gamma_hnorm = (Eigen::VectorXd(2) << 1.0, 1e-9).finished();
  const PenaltySpec s = adaptive_lambdas(0.1, unpen, PenaltyFamily::scad);
  CHECK(s.lambda_phi(0) == doctest::Approx(0.4));
  CHECK(s.lambda_phi(1) == doctest::Approx(0.1 * kAdaptiveCap));
  CHECK(s.lambda_theta(0) == doctest::Approx(0.2));
  CHECK(s.lambda_theta(1) == doctest::Approx(0.05));
  CHECK(s.lambda_gamma(0) == doctest::Approx(0.1));
  CHECK(s.lambda_gamma(1) == doctest::Approx(0.1 * kAdaptiveCap));
  CHECK(std::isfinite(s.lambda_gamma(1)));

  const PenaltySpec zero = adaptive_lambdas(0.0, unpen, PenaltyFamily::lasso);
  CHECK(zero.disabled());
  CHECK(zero.family == PenaltyFamily::lasso);
}

TEST_CASE("folds partition the rows deterministically") {
  const auto f = make_folds(23, 5, 99);
  REQUIRE(f.size() == 5);
  std::set<Eigen::Index> seen;
  std::size_t smallest = 100, largest = 0;
  for (const auto& fold : f) {
    CHECK(std::is_sorted(fold.begin(), fold.end()));
    smallest = std::min(smallest, fold.size());
    largest = std::max(largest, fold.size());
    seen.insert(fold.begin(), fold.end());
  }
  CHECK(seen.size() == 23);
  CHECK(largest - smallest <= 1);
  CHECK(make_folds(23, 5, 99) == f);
  CHECK(make_folds(23, 5, 100) != f);
  CHECK_THROWS_AS(make_folds(4, 5, 1), ConfigError);
  CHECK_THROWS_AS(make_folds(4, 1, 1), ConfigError);
}

TEST_CASE("leave-one-out score of a three-point intercept model") {
  Dataset ds;
  ds.y = (Eigen::VectorXd(3) << 1.0, 4.0, 10.0).finished();
  ds.u.resize(3, 0);
  ds.x = (Eigen::MatrixXd(3, 2) << 0.1, 0.3, -0.4, 0.2, 0.7, -0.5).finished();
  ds.z = Eigen::MatrixXd::Ones(3, 1);
  FitConfig cfg;
  cfg.degree = 0;
  // Each held-out residual is y_i minus the mean of the other two.
  const double expected = std::pow(1.0 - 7.0, 2) + std::pow(4.0 - 5.5, 2) + std::pow(10.0 - 2.5, 2);
  CvCache cache(ds, cfg, 3, 1);
  CHECK(cv_score_unpenalized(cache, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(cv_score(cache, 0, 0.0, PenaltyFamily::scad) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("noise-free folds score zero") {
  const Dataset ds = constant_link(60, 4);
  FitConfig cfg;
  cfg.num_interior = 0;
  cfg.degree = 1;
  CvCache cache(ds, cfg, 5, 2);
  CHECK(cv_score_unpenalized(cache, 0) < 1e-18 * ds.y.squaredNorm());
}

TEST_CASE("fold failures are reported as insufficient fold size") {
  const Dataset ds = small_model(30, 5);
  FitConfig cfg;
  CvCache cache(ds, cfg, 2, 1);
  // 3 + 2 * 8 = 19 coefficients fit the full 30 rows but not a 15-row fold.
  CHECK_NOTHROW(cache.full(4));
  CHECK_THROWS_WITH_AS(cache.fold(4, 0), doctest::Contains("insufficient fold size"), DataError);
}

TEST_CASE("single-point grid and tie-breaking") {
  const Dataset ds = small_model(80, 6);
  FitConfig cfg;
  TuningGrid one{{0.05}, {1}, 4};
  const Selection s = select(ds, one, cfg, 3);
  CHECK(s.num_interior == 1);
  CHECK(s.lambda == 0.05);
  REQUIRE(s.table.size() == 1);
  CHECK(s.table[0].ok);

  // Duplicate lambdas score identically; the first one wins.
  TuningGrid dup{{0.05, 0.05}, {1}, 4};
  const Selection d = select(ds, dup, cfg, 3);
  REQUIRE(d.table.size() == 2);
  CHECK(d.table[0].score == d.table[1].score);
  CHECK(d.lambda == 0.05);
  CHECK(d.table[0].score == s.table[0].score);
}

TEST_CASE("selection is deterministic and covers the grid") {
  const Dataset ds = small_model(80, 8);
  FitConfig cfg;
  TuningGrid grid{{0.01, 0.1, 1.0}, {2, 1}, 4};
  const Selection a = select(ds, grid, cfg, 11);
  const Selection b = select(ds, grid, cfg, 11);
  REQUIRE(a.table.size() == 6);
  CHECK(a.table[0].num_interior == 1);  // K ascending, then lambda
  CHECK(a.table[2].lambda == 1.0);
  CHECK(a.num_interior == b.num_interior);
  CHECK(a.lambda == b.lambda);
  CHECK(a.fit.coef.beta == b.fit.coef.beta);
  double best = 1e300;
  for (const auto& p : a.table) best = std::min(best, p.score);
  for (const auto& p : a.table) {
    if (p.num_interior == a.num_interior && p.lambda == a.lambda) CHECK(p.score == best);
  }
  // The largest lambda removes too much on this dense model.
  CHECK(a.table[2].score >= best);
}

TEST_CASE("default lambda grid follows the residual scale") {
  const Dataset ds = small_model(60, 9);
  FitConfig cfg;
  TuningGrid grid{{}, {1}, 3};
  CvCache cache(ds, cfg, 3, 2);
  const Selection s = select(cache, grid, PenaltyFamily::lasso);
  const double sigma = std::sqrt(cache.full(1).rss / 60.0);
  CHECK(s.sigma_hat == doctest::Approx(sigma));
  REQUIRE(s.table.size() == 20);
  CHECK(s.table.front().lambda == doctest::Approx(1e-3 * sigma));
  CHECK(s.table.back().lambda == doctest::Approx(2.0 * sigma));
}

TEST_CASE("knot selection for the unpenalized fit") {
  const Dataset ds = small_model(80, 10);
  CvCache cache(ds, FitConfig{}, 4, 1);
  const KnotSelection k = select_knots_unpenalized(cache, {3, 1, 2});
  REQUIRE(k.table.size() == 3);
  CHECK(k.table[0].num_interior == 1);
  double best = 1e300;
  for (const auto& p : k.table) best = std::min(best, p.score);
  for (const auto& p : k.table) {
    if (p.num_interior == k.num_interior) CHECK(p.score == best);
  }
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS((TuningGrid{{-1.0}, {}, 5}.validate(100)), ConfigError);
  CHECK_THROWS_AS((TuningGrid{{}, {-1}, 5}.validate(100)), ConfigError);
  CHECK_THROWS_AS((TuningGrid{{}, {}, 1}.validate(100)), ConfigError);
  CHECK_THROWS_AS((TuningGrid{{}, {}, 101}.validate(100)), ConfigError);
  CHECK_NOTHROW((TuningGrid{{}, {}, 100}.validate(100)));
}

}  // TEST_SUITE
