#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "plsivc/simulation.hpp"
#include "plsivc/spline_basis.hpp"

namespace fixture {

/// Covariates from the simulation design with the response replaced by a
/// noise-free model whose coefficient functions are splines on the knots the
/// estimator builds at the true index. gamma columns are least-squares
/// projections of the simulation's g_1, g_2 (others zero).
struct ExactSpline {
  plsivc::Dataset data;
  Eigen::VectorXd beta;
  Eigen::VectorXd theta;
  Eigen::MatrixXd gamma;
  std::vector<double> knots;  // full clamped sequence
  int degree = 3;

  plsivc::KnotVector knot_vector() const {
    return {degree, knots.front(), knots.back(),
            std::vector<double>(knots.begin() + degree + 1, knots.end() - degree - 1)};
  }
};

inline ExactSpline exact_spline(Eigen::Index n, int num_interior, int degree, std::uint64_t seed,
                                Eigen::Index p = 10, Eigen::Index d = 10, Eigen::Index q = 10) {
  using namespace plsivc;
  SimConfig cfg;
  cfg.n = n;
  cfg.sigma = 0.0;
  cfg.seed = seed;
  cfg.validation = true;
  const Truth truth = default_truth();
  Dataset full = gen_dataset(cfg, truth, 0);

  std::vector<Eigen::Index> u_cols, x_cols, z_cols;
  for (Eigen::Index j = 0; j < d; ++j) u_cols.push_back(j);
  for (Eigen::Index j = 0; j < p; ++j) x_cols.push_back(j);
  for (Eigen::Index j = 0; j < q; ++j) z_cols.push_back(j);

  ExactSpline out;
  out.data = full.select_columns(u_cols, x_cols, z_cols);
  out.degree = degree;
  out.beta = normalize_direction(truth.beta.head(p));
  out.theta = truth.theta.head(d);

  const Eigen::VectorXd index = out.data.x * out.beta;
  const KnotVector kv = make_knots(
      std::span<const double>(index.data(), static_cast<std::size_t>(n)), num_interior, degree);
  const auto k = kv.knots();
  out.knots.assign(k.begin(), k.end());
  const int L = kv.num_basis();

  // Projection of g_1 and g_2 onto the spline space on a fine grid.
  const int grid = 2000;
  Eigen::MatrixXd b(grid, L);
  Eigen::MatrixXd g(grid, 2);
  for (int i = 0; i < grid; ++i) {
    const double u = kv.lower() + (kv.upper() - kv.lower()) * i / (grid - 1);
    for (int j = 0; j < L; ++j) b(i, j) = oracle::bspline(out.knots, j, degree, u);
    for (int c = 0; c < 2; ++c) g(i, c) = truth.g(c, u);
  }
  out.gamma = Eigen::MatrixXd::Zero(L, q);
  for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, q); ++c) {
    out.gamma.col(c) = oracle::least_squares(b, g.col(c));
  }

  Eigen::VectorXd y = out.data.u * out.theta;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < L; ++j) {
      const double bj = oracle::bspline(out.knots, j, degree, index(i));
      if (bj == 0.0) continue;
      for (Eigen::Index c = 0; c < q; ++c) y(i) += out.data.z(i, c) * bj * out.gamma(j, c);
    }
  }
  out.data.y = y;
  return out;
}

}  // namespace fixture
