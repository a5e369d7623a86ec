#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plsivc/spline_basis.hpp"

namespace plsivc {

/// Response plus the three covariate blocks of
///   Y = theta^T U + g(beta^T X)^T Z + error.
/// U may have zero columns; Z never gets an implicit intercept.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd u;  // n x d, linear part
  Eigen::MatrixXd x;  // n x p, index covariates
  Eigen::MatrixXd z;  // n x q, varying-coefficient covariates

  std::vector<std::string> u_names;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index d() const { return u.cols(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index q() const { return z.cols(); }

  /// Throws DataError unless row counts agree, n >= 1, p >= 2, q >= 1 and
  /// every entry is finite.
  void validate() const;

  /// Rows listed in `rows`, in that order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

  /// Keeps only the listed columns of each block (names follow).
  Dataset select_columns(const std::vector<Eigen::Index>& u_cols,
                         const std::vector<Eigen::Index>& x_cols,
                         const std::vector<Eigen::Index>& z_cols) const;

  /// Default names u1.., x1.., z1.. for any block whose names are missing.
  void fill_default_names();
};

/// Tolerance below which a beta entry counts as zero for the sign rule.
inline constexpr double kSignTolerance = 1e-10;

/// phi = (beta_2, ..., beta_p) in the open unit ball; beta is derived.
class IndexParam {
 public:
  IndexParam() = default;
  /// Throws DomainError unless ||phi|| < 1.
  explicit IndexParam(Eigen::VectorXd phi);

  const Eigen::VectorXd& values() const noexcept { return phi_; }
  Eigen::Index size() const noexcept { return phi_.size(); }
  double norm() const { return phi_.norm(); }

 private:
  Eigen::VectorXd phi_;
};

/// beta = (sqrt(1 - ||phi||^2), phi^T)^T. Throws DomainError if ||phi|| >= 1.
Eigen::VectorXd beta_from_phi(const Eigen::VectorXd& phi);
inline Eigen::VectorXd beta_from_phi(const IndexParam& phi) {
  return beta_from_phi(phi.values());
}

/// Unit-length copy of beta whose first entry above kSignTolerance in
/// magnitude is positive. Throws DomainError on the zero vector.
Eigen::VectorXd normalize_direction(const Eigen::VectorXd& beta);

/// Normalizes and sign-flips beta, then drops its first entry.
IndexParam phi_from_beta(const Eigen::VectorXd& beta);

/// d beta / d phi: first row -phi^T / sqrt(1 - ||phi||^2), identity below.
Eigen::MatrixXd jacobian(const Eigen::VectorXd& phi);

/// W_i = (I_q kron B(beta^T x_i)) z_i: block k is z_ik B(beta^T x_i).
Eigen::VectorXd design_row(const KnotVector& kv, const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& x_row,
                           const Eigen::VectorXd& z_row,
                           EvalDiagnostics* diag = nullptr);

/// (U_i; W_i).
Eigen::VectorXd augmented_row(const Eigen::VectorXd& u_row,
                              const Eigen::VectorXd& w);

/// sqrt(gamma_k^T H gamma_k), the L2 norm of u -> B(u)^T gamma_k.
double h_norm(const Eigen::VectorXd& gamma_k, const Eigen::MatrixXd& gram);

/// theta, the spline coefficients gamma (L x q, column k = gamma_k) and the
/// derived unit-norm beta.
struct Coefficients {
  Eigen::VectorXd beta;
  Eigen::VectorXd theta;
  Eigen::MatrixXd gamma;

  /// alpha = (theta; gamma_1; ...; gamma_q).
  Eigen::VectorXd alpha() const;
};

/// Fitted values theta^T U_i + sum_k z_ik B(beta^T x_i)^T gamma_k.
Eigen::VectorXd predict(const Dataset& data, const KnotVector& kv,
                        const Coefficients& coef,
                        EvalDiagnostics* diag = nullptr);

/// g_k(u) = B(u)^T gamma_k for every column k, one row per grid point.
Eigen::MatrixXd evaluate_functions(const KnotVector& kv,
                                   const Eigen::MatrixXd& gamma,
                                   const std::vector<double>& grid,
                                   OutOfRange mode = OutOfRange::extend);

}  // namespace plsivc
