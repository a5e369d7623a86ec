#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "plsivc/errors.hpp"
#include "plsivc/spline_basis.hpp"

using namespace plsivc;

namespace {

KnotVector random_knots(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> deg(0, 5), count(0, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lower = -2.0 + 2.0 * unit(rng);
  const double upper = lower + 0.5 + 3.0 * unit(rng);
  std::vector<double> interior(static_cast<std::size_t>(count(rng)));
  for (auto& v : interior) v = lower + (upper - lower) * (0.02 + 0.96 * unit(rng));
  std::sort(interior.begin(), interior.end());
  return KnotVector(deg(rng), lower, upper, interior);
}

std::vector<double> full_knots(const KnotVector& kv) {
  const auto k = kv.knots();
  return {k.begin(), k.end()};
}

}  // namespace

TEST_SUITE("spline_basis") {

TEST_CASE("make_knots spaces interior knots evenly") {
  const std::vector<double> unit{0.0, 0.4, 1.0};
  const KnotVector k0 = make_knots(unit, 0, 3, 0.0);
  CHECK(k0.num_interior() == 0);
  CHECK(k0.num_basis() == 4);

  const KnotVector k2 = make_knots(unit, 2, 3, 0.0);
  REQUIRE(k2.num_interior() == 2);
  CHECK(k2.interior()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(k2.interior()[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(k2.num_basis() == 6);

  const std::vector<double> sim{-1.25, 0.3, 1.25};
  const KnotVector k3 = make_knots(sim, 3, 3, 0.0);
  REQUIRE(k3.num_interior() == 3);
  CHECK(k3.interior()[0] == doctest::Approx(-0.625));
  CHECK(k3.interior()[1] == doctest::Approx(0.0));
  CHECK(k3.interior()[2] == doctest::Approx(0.625));
  CHECK(k3.num_basis() == 7);
}

TEST_CASE("make_knots pads the range") {
  const std::vector<double> v{0.0, 1.0};
  const KnotVector kv = make_knots(v, 1, 2, 0.01);
  CHECK(kv.lower() == doctest::Approx(-0.01));
  CHECK(kv.upper() == doctest::Approx(1.01));
}

TEST_CASE("make_knots rejects degenerate input") {
  const std::vector<double> same{0.5, 0.5, 0.5};
  CHECK_THROWS_AS(make_knots(same, 2, 3), DomainError);
  CHECK_THROWS_AS(make_knots(std::vector<double>{}, 2, 3), DomainError);
  const std::vector<double> v{0.0, 1.0};
  CHECK_THROWS_AS(make_knots(v, -1, 3), ConfigError);
}

TEST_CASE("knot vector validation") {
  CHECK_THROWS_AS(KnotVector(-1, 0.0, 1.0, {}), ConfigError);
  CHECK_THROWS_AS(KnotVector(kMaxSplineDegree + 1, 0.0, 1.0, {}), ConfigError);
  CHECK_THROWS_AS(KnotVector(3, 1.0, 1.0, {}), DomainError);
  CHECK_THROWS_AS(KnotVector(3, 0.0, 1.0, {1.0}), DomainError);
  CHECK_THROWS_AS(KnotVector(3, 0.0, 1.0, {0.6, 0.4}), DomainError);
}

TEST_CASE("small closed-form bases") {
  const KnotVector constant(0, 0.0, 1.0, {});
  const Eigen::VectorXd b0 = eval_basis(constant, 0.3);
  REQUIRE(b0.size() == 1);
  CHECK(b0(0) == 1.0);

  const KnotVector cubic(3, 0.0, 1.0, {1.0 / 3, 2.0 / 3});
  const Eigen::VectorXd left = eval_basis(cubic, 0.0);
  CHECK(left(0) == 1.0);
  CHECK(left.tail(5).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd right = eval_basis(cubic, 1.0);
  CHECK(right(5) == doctest::Approx(1.0));

  const KnotVector hat(1, 0.0, 1.0, {});
  const Eigen::VectorXd d = eval_basis_deriv(hat, 0.5);
  CHECK(d(0) == doctest::Approx(-1.0));
  CHECK(d(1) == doctest::Approx(1.0));
}

TEST_CASE("basis matches the recursive definition") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const KnotVector kv = random_knots(rng);
    const auto t = full_knots(kv);
    for (int j = 0; j < 15; ++j) {
      const double u = kv.lower() + (kv.upper() - kv.lower()) * unit(rng);
      const Eigen::VectorXd b = eval_basis(kv, u);
      for (int i = 0; i < kv.num_basis(); ++i) {
        CHECK(b(i) == doctest::Approx(oracle::bspline(t, i, kv.degree(), u)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("partition of unity, derivative sums and finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_unity = 0.0, worst_deriv_sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const KnotVector kv = random_knots(rng);
    for (int j = 0; j < 20; ++j) {
      const double u = kv.lower() + (kv.upper() - kv.lower()) * unit(rng);
      worst_unity = std::max(worst_unity, std::abs(eval_basis(kv, u).sum() - 1.0));
      if (kv.degree() > 0) {
        const Eigen::VectorXd d = eval_basis_deriv(kv, u);
        worst_deriv_sum =
            std::max(worst_deriv_sum, std::abs(d.sum()) / (1.0 + d.cwiseAbs().maxCoeff()));
      }
    }
  }
  CHECK(worst_unity < 1e-12);
  CHECK(worst_deriv_sum < 1e-10);
}

TEST_CASE("derivative against finite differences away from knots") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const KnotVector kv = random_knots(rng);
    if (kv.degree() < 2) continue;  // degree 1 is only piecewise linear
    const auto t = full_knots(kv);
    const double u = kv.lower() + (kv.upper() - kv.lower()) * (0.05 + 0.9 * unit(rng));
    double nearest = 1e300;
    for (double k : t) nearest = std::min(nearest, std::abs(k - u));
    if (nearest < 1e-3) continue;
    const Eigen::VectorXd d = eval_basis_deriv(kv, u);
    for (int i = 0; i < kv.num_basis(); ++i) {
      const double fd = oracle::derivative([&](double x) { return eval_basis(kv, x)(i); }, u, 1e-5);
      CHECK(std::abs(d(i) - fd) <= 1e-6 * std::max(1.0, std::abs(d(i))));
    }
  }
}

TEST_CASE("out-of-range evaluation") {
  const KnotVector hat(1, 0.0, 1.0, {});
  EvalDiagnostics diag;
  const LocalBasis clamped = eval_local(hat, 1.5, true, OutOfRange::clamp, &diag);
  CHECK(clamped.value[1] == doctest::Approx(1.0));
  CHECK(clamped.deriv[1] == 0.0);
  const LocalBasis extended = eval_local(hat, 1.5, true, OutOfRange::extend, &diag);
  CHECK(extended.value[0] == doctest::Approx(-0.5));
  CHECK(extended.value[1] == doctest::Approx(1.5));
  CHECK(extended.deriv[1] == doctest::Approx(1.0));
  CHECK(diag.out_of_range == 2);
}

TEST_CASE("Gram matrix") {
  const KnotVector constant(0, 0.0, 1.0, {});
  CHECK(gram_matrix(constant)(0, 0) == doctest::Approx(1.0));

  const Eigen::MatrixXd h = gram_matrix(KnotVector(1, 0.0, 1.0, {}));
  CHECK(h(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(h(0, 1) == doctest::Approx(1.0 / 6));
  CHECK(h(1, 1) == doctest::Approx(1.0 / 3));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const KnotVector kv = random_knots(rng);
    const Eigen::MatrixXd g = gram_matrix(kv);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues()(0) > 0.0);
    if (trial % 10 == 0) {
      const auto t = full_knots(kv);
      const int L = kv.num_basis();
      for (int i = 0; i < L; ++i) {
        for (int j = i; j < L; ++j) {
          // Span by span, pulled slightly inside so degree-0 jumps are
          // never sampled from the wrong side.
          double ref = 0.0;
          for (std::size_t s = 0; s + 1 < t.size(); ++s) {
            if (t[s + 1] <= t[s]) continue;
            const double mid = 0.5 * (t[s] + t[s + 1]);
            ref += oracle::trapezoid(
                [&](double u) {
                  const double x = mid + (u - mid) * (1.0 - 1e-12);
                  return oracle::bspline(t, i, kv.degree(), x) * oracle::bspline(t, j, kv.degree(), x);
                },
                t[s], t[s + 1], 4000);
          }
          CHECK(std::abs(g(i, j) - ref) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("Gauss-Legendre rule is exact to degree 2n-1") {
  for (int n = 1; n <= 8; ++n) {
    const QuadratureRule q = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += q.weights[i] * std::pow(q.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(gauss_legendre(0), ConfigError);
}

TEST_CASE("mesh ratio and spans") {
  const KnotVector kv(2, 0.0, 1.0, {0.25, 0.5});
  CHECK(kv.mesh_ratio() == doctest::Approx(2.0));
  CHECK(kv.find_span(0.0) == 2);
  CHECK(kv.find_span(0.3) == 3);
  CHECK(kv.find_span(1.0) == kv.num_basis() - 1);
  CHECK(kv.find_span(-4.0) == 2);
}

}  // TEST_SUITE
