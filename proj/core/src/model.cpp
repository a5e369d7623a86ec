#include "plsivc/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plsivc/errors.hpp"

namespace plsivc {

void Dataset::validate() const {
  const Eigen::Index rows = y.size();
  if (rows < 1) throw DataError("dataset has no rows");
  if (u.rows() != rows || x.rows() != rows || z.rows() != rows) {
    throw DataError("covariate blocks and response have different row counts");
  }
  if (x.cols() < 2) throw DataError("index block X needs at least two columns");
  if (z.cols() < 1) throw DataError("varying-coefficient block Z needs at least one column");
  const auto finite = [](const auto& m) { return m.allFinite(); };
  if (!finite(y) || !finite(u) || !finite(x) || !finite(z)) {
    throw DataError("dataset contains non-finite values");
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.y.resize(m);
  out.u.resize(m, d());
  out.x.resize(m, p());
  out.z.resize(m, q());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = rows[i];
    out.y(i) = y(r);
    out.u.row(i) = u.row(r);
    out.x.row(i) = x.row(r);
    out.z.row(i) = z.row(r);
  }
  out.u_names = u_names;
  out.x_names = x_names;
  out.z_names = z_names;
  return out;
}

namespace {

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& m,
                             const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = m.col(cols[j]);
  return out;
}

std::vector<std::string> take_names(const std::vector<std::string>& names,
                                    const std::vector<Eigen::Index>& cols) {
  if (names.empty()) return {};
  std::vector<std::string> out;
  out.reserve(cols.size());
  for (Eigen::Index c : cols) out.push_back(names.at(c));
  return out;
}

}  // namespace

Dataset Dataset::select_columns(const std::vector<Eigen::Index>& u_cols,
                                const std::vector<Eigen::Index>& x_cols,
                                const std::vector<Eigen::Index>& z_cols) const {
  Dataset out;
  out.y = y;
  out.u = take_columns(u, u_cols);
  out.x = take_columns(x, x_cols);
  out.z = take_columns(z, z_cols);
  out.u_names = take_names(u_names, u_cols);
  out.x_names = take_names(x_names, x_cols);
  out.z_names = take_names(z_names, z_cols);
  return out;
}

void Dataset::fill_default_names() {
  const auto fill = [](std::vector<std::string>& names, Eigen::Index count,
                       const char* prefix) {
    if (static_cast<Eigen::Index>(names.size()) == count) return;
    names.clear();
    for (Eigen::Index j = 0; j < count; ++j) {
      names.push_back(prefix + std::to_string(j + 1));
    }
  };
  fill(u_names, d(), "u");
  fill(x_names, p(), "x");
  fill(z_names, q(), "z");
}

IndexParam::IndexParam(Eigen::VectorXd phi) : phi_(std::move(phi)) {
  if (!phi_.allFinite() || !(phi_.squaredNorm() < 1.0)) {
    throw DomainError("index parameter must satisfy ||phi|| < 1");
  }
}

Eigen::VectorXd beta_from_phi(const Eigen::VectorXd& phi) {
  const double sq = phi.squaredNorm();
  if (!(sq < 1.0)) throw DomainError("index parameter must satisfy ||phi|| < 1");
  Eigen::VectorXd beta(phi.size() + 1);
  beta(0) = std::sqrt(1.0 - sq);
  beta.tail(phi.size()) = phi;
  return beta;
}

Eigen::VectorXd normalize_direction(const Eigen::VectorXd& beta) {
  const double norm = beta.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DomainError("index direction must be a nonzero finite vector");
  }
  Eigen::VectorXd out = beta / norm;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (std::abs(out(j)) > kSignTolerance) {
      if (out(j) < 0.0) out = -out;
      break;
    }
  }
  return out;
}

IndexParam phi_from_beta(const Eigen::VectorXd& beta) {
  if (beta.size() < 2) throw DomainError("index direction needs at least two entries");
  const Eigen::VectorXd b = normalize_direction(beta);
  return IndexParam(b.tail(b.size() - 1));
}

Eigen::MatrixXd jacobian(const Eigen::VectorXd& phi) {
  const double sq = phi.squaredNorm();
  if (!(sq < 1.0)) throw DomainError("index parameter must satisfy ||phi|| < 1");
  const Eigen::Index m = phi.size();
  Eigen::MatrixXd j(m + 1, m);
  j.row(0) = -phi.transpose() / std::sqrt(1.0 - sq);
  j.bottomRows(m).setIdentity();
  return j;
}

Eigen::VectorXd design_row(const KnotVector& kv, const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& x_row,
                           const Eigen::VectorXd& z_row, EvalDiagnostics* diag) {
  const Eigen::VectorXd b = eval_basis(kv, beta.dot(x_row), diag);
  const Eigen::Index nb = b.size();
  Eigen::VectorXd w(z_row.size() * nb);
  for (Eigen::Index k = 0; k < z_row.size(); ++k) {
    w.segment(k * nb, nb) = z_row(k) * b;
  }
  return w;
}

Eigen::VectorXd augmented_row(const Eigen::VectorXd& u_row, const Eigen::VectorXd& w) {
  Eigen::VectorXd out(u_row.size() + w.size());
  out << u_row, w;
  return out;
}

double h_norm(const Eigen::VectorXd& gamma_k, const Eigen::MatrixXd& gram) {
  if (gram.rows() != gamma_k.size() || gram.cols() != gamma_k.size()) {
    throw std::invalid_argument("h_norm: coefficient length does not match the Gram matrix");
  }
  return std::sqrt(std::max(0.0, gamma_k.dot(gram * gamma_k)));
}

Eigen::VectorXd Coefficients::alpha() const {
  Eigen::VectorXd a(theta.size() + gamma.size());
  a.head(theta.size()) = theta;
  a.tail(gamma.size()) = gamma.reshaped();
  return a;
}

Eigen::VectorXd predict(const Dataset& data, const KnotVector& kv,
                        const Coefficients& coef, EvalDiagnostics* diag) {
  const Eigen::VectorXd index = data.x * coef.beta;
  Eigen::VectorXd fitted = data.u * coef.theta;
  const int deg = kv.degree();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const LocalBasis lb = eval_local(kv, index(i), false, OutOfRange::clamp, diag);
    double s = 0.0;
    for (Eigen::Index k = 0; k < data.q(); ++k) {
      double gk = 0.0;
      for (int r = 0; r <= deg; ++r) gk += lb.value[r] * coef.gamma(lb.first + r, k);
      s += data.z(i, k) * gk;
    }
    fitted(i) += s;
  }
  return fitted;
}

Eigen::MatrixXd evaluate_functions(const KnotVector& kv, const Eigen::MatrixXd& gamma,
                                   const std::vector<double>& grid, OutOfRange mode) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()),
                                              gamma.cols());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const LocalBasis lb = eval_local(kv, grid[j], false, mode);
    for (Eigen::Index k = 0; k < gamma.cols(); ++k) {
      double g = 0.0;
      for (int r = 0; r <= kv.degree(); ++r) g += lb.value[r] * gamma(lb.first + r, k);
      out(static_cast<Eigen::Index>(j), k) = g;
    }
  }
  return out;
}

}  // namespace plsivc
