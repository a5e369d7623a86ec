#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "plsivc/errors.hpp"
#include "plsivc/model.hpp"

using namespace plsivc;

namespace {

Dataset random_dataset(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, Eigen::Index p,
                       Eigen::Index q) {
  std::normal_distribution<double> z;
  Dataset ds;
  ds.y = Eigen::VectorXd::NullaryExpr(n, [&] { return z(rng); });
  ds.u = Eigen::MatrixXd::NullaryExpr(n, d, [&] { return z(rng); });
  ds.x = Eigen::MatrixXd::NullaryExpr(n, p, [&] { return z(rng); });
  ds.z = Eigen::MatrixXd::NullaryExpr(n, q, [&] { return z(rng); });
  return ds;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("beta from phi") {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(9);
  const Eigen::VectorXd e1 = beta_from_phi(phi);
  CHECK(e1(0) == 1.0);
  CHECK(e1.tail(9).cwiseAbs().maxCoeff() == 0.0);

  phi(0) = 2.0 / 3;
  phi(1) = 2.0 / 3;
  const Eigen::VectorXd b = beta_from_phi(phi);
  CHECK(b(0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(b(1) == doctest::Approx(2.0 / 3));
  CHECK(b.norm() == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(beta_from_phi(Eigen::VectorXd::Constant(2, 0.8)), DomainError);
  CHECK_THROWS_AS(IndexParam(Eigen::VectorXd::Constant(1, 1.0)), DomainError);
}

TEST_CASE("direction normalization and phi recovery") {
  const IndexParam a = phi_from_beta((Eigen::VectorXd(3) << 1, 0, 0).finished());
  CHECK(a.values().cwiseAbs().maxCoeff() == 0.0);

  const IndexParam b = phi_from_beta((Eigen::VectorXd(3) << -1.0 / 3, -2.0 / 3, -2.0 / 3).finished());
  CHECK(b.values()(0) == doctest::Approx(2.0 / 3));
  CHECK(b.values()(1) == doctest::Approx(2.0 / 3));

  const IndexParam c = phi_from_beta((Eigen::VectorXd(2) << 2.0 * 0.3, 8.0 / 3 * 0.3).finished());
  CHECK(c.values()(0) == doctest::Approx(0.8));

  // Leading zero: the sign rule looks at the first nonzero entry.
  const Eigen::VectorXd n = normalize_direction((Eigen::VectorXd(3) << 0, -3, 4).finished());
  CHECK(n(1) == doctest::Approx(0.6));
  CHECK(n(2) == doctest::Approx(-0.8));
  CHECK_THROWS_AS(normalize_direction(Eigen::VectorXd::Zero(3)), DomainError);
}

TEST_CASE("jacobian") {
  const Eigen::MatrixXd j0 = jacobian(Eigen::VectorXd::Zero(3));
  CHECK(j0.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((j0.bottomRows(3) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd j = jacobian((Eigen::VectorXd(2) << 0.6, 0.0).finished());
  CHECK(j(0, 0) == doctest::Approx(-0.75));
  CHECK(j(0, 1) == 0.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(-0.4, 0.4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd phi = Eigen::VectorXd::NullaryExpr(4, [&] { return unit(rng); });
    const Eigen::MatrixXd an = jacobian(phi);
    for (Eigen::Index r = 0; r < 5; ++r) {
      const Eigen::VectorXd fd = oracle::gradient(
          [&](const Eigen::VectorXd& v) { return beta_from_phi(v)(r); }, phi);
      CHECK((fd - an.row(r).transpose()).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("design rows") {
  const KnotVector hat(1, 0.0, 1.0, {});
  const Eigen::VectorXd beta = (Eigen::VectorXd(2) << 1, 0).finished();
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 0.25, 9).finished();
  const Eigen::VectorXd z = (Eigen::VectorXd(2) << 1, 3).finished();
  const Eigen::VectorXd w = design_row(hat, beta, x, z);
  REQUIRE(w.size() == 4);
  CHECK(w(0) == doctest::Approx(0.75));
  CHECK(w(1) == doctest::Approx(0.25));
  CHECK(w(2) == doctest::Approx(2.25));
  CHECK(w(3) == doctest::Approx(0.75));
  CHECK(design_row(hat, beta, x, Eigen::VectorXd::Zero(2)).cwiseAbs().maxCoeff() == 0.0);

  CHECK(augmented_row(Eigen::VectorXd(0), w) == w);
  const Eigen::VectorXd a =
      augmented_row((Eigen::VectorXd(2) << 1, 2).finished(), Eigen::VectorXd::Constant(1, 3));
  CHECK(a == (Eigen::VectorXd(3) << 1, 2, 3).finished());
}

TEST_CASE("design rows reproduce spline functions") {
  const KnotVector kv(3, -1.0, 1.0, {-0.5, 0.0, 0.5});
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  Eigen::MatrixXd gamma = Eigen::MatrixXd::NullaryExpr(kv.num_basis(), 2, [&] { return z(rng); });
  const auto t = oracle::clamped(3, -1.0, 1.0, {-0.5, 0.0, 0.5});
  const Eigen::VectorXd beta = (Eigen::VectorXd(2) << 0.6, 0.8).finished();
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(2, [&] { return 0.5 * z(rng); });
    const Eigen::VectorXd zr = Eigen::VectorXd::NullaryExpr(2, [&] { return z(rng); });
    const double u = std::clamp(beta.dot(x), -1.0, 1.0);
    double direct = 0.0;
    for (int k = 0; k < 2; ++k) {
      double g = 0.0;
      for (int j = 0; j < kv.num_basis(); ++j) g += gamma(j, k) * oracle::bspline(t, j, 3, u);
      direct += g * zr(k);
    }
    const Eigen::VectorXd w = design_row(kv, beta, x, zr);
    const Eigen::VectorXd stacked = Eigen::Map<const Eigen::VectorXd>(gamma.data(), gamma.size());
    CHECK(w.dot(stacked) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("H-norm") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  CHECK(h_norm(Eigen::VectorXd::Constant(1, -2.5), one) == doctest::Approx(2.5));
  const KnotVector kv(2, 0.0, 2.0, {0.7, 1.1});
  const Eigen::MatrixXd gram = gram_matrix(kv);
  CHECK(h_norm(Eigen::VectorXd::Zero(kv.num_basis()), gram) == 0.0);
  const auto t = oracle::clamped(2, 0.0, 2.0, {0.7, 1.1});
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd g = Eigen::VectorXd::NullaryExpr(kv.num_basis(), [&] { return z(rng); });
    const double ref = std::sqrt(oracle::trapezoid(
        [&](double u) {
          double s = 0.0;
          for (int j = 0; j < kv.num_basis(); ++j) s += g(j) * oracle::bspline(t, j, 2, u);
          return s * s;
        },
        0.0, 2.0, 10000));
    CHECK(h_norm(g, gram) == doctest::Approx(ref).epsilon(1e-4));
  }
}

TEST_CASE("prediction two ways") {
  std::mt19937_64 rng(21);
  Dataset ds = random_dataset(rng, 30, 2, 3, 2);
  ds.x *= 0.3;
  const KnotVector kv(3, -1.5, 1.5, {0.0});
  Coefficients c;
  c.beta = normalize_direction((Eigen::VectorXd(3) << 1, 0.5, -0.2).finished());
  c.theta = (Eigen::VectorXd(2) << 0.7, -1.1).finished();
  c.gamma = Eigen::MatrixXd::Random(kv.num_basis(), 2);
  const Eigen::VectorXd fit = predict(ds, kv, c);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const Eigen::VectorXd row = augmented_row(
        ds.u.row(i).transpose(), design_row(kv, c.beta, ds.x.row(i).transpose(), ds.z.row(i).transpose()));
    CHECK(row.dot(c.alpha()) == doctest::Approx(fit(i)).epsilon(1e-13));
  }
}

TEST_CASE("function evaluation extends past the knots") {
  const KnotVector hat(1, 0.0, 1.0, {});
  const Eigen::MatrixXd gamma = (Eigen::MatrixXd(2, 1) << 1.0, 3.0).finished();
  const Eigen::MatrixXd g = evaluate_functions(hat, gamma, {-1.0, 0.5, 2.0});
  CHECK(g(0, 0) == doctest::Approx(-1.0));
  CHECK(g(1, 0) == doctest::Approx(2.0));
  CHECK(g(2, 0) == doctest::Approx(5.0));
  const Eigen::MatrixXd c = evaluate_functions(hat, gamma, {2.0}, OutOfRange::clamp);
  CHECK(c(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("dataset validation, subsets and column selection") {
  std::mt19937_64 rng(1);
  Dataset ds = random_dataset(rng, 6, 2, 3, 2);
  CHECK_NOTHROW(ds.validate());

  Dataset bad = ds;
  bad.x = bad.x.leftCols(1);
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = ds;
  bad.z.resize(6, 0);
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = ds;
  bad.u(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = ds;
  bad.y.resize(5);
  CHECK_THROWS_AS(bad.validate(), DataError);

  ds.fill_default_names();
  CHECK(ds.u_names == std::vector<std::string>{"u1", "u2"});
  CHECK(ds.z_names.back() == "z2");

  const Dataset sub = ds.subset({4, 1});
  CHECK(sub.n() == 2);
  CHECK(sub.y(0) == ds.y(4));
  CHECK(sub.x(1, 2) == ds.x(1, 2));

  const Dataset cols = ds.select_columns({1}, {0, 2}, {1});
  CHECK(cols.d() == 1);
  CHECK(cols.p() == 2);
  CHECK(cols.q() == 1);
  CHECK(cols.x_names == std::vector<std::string>{"x1", "x3"});
  CHECK(cols.u.col(0) == ds.u.col(1));
}

}  // TEST_SUITE
