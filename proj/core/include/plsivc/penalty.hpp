#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace plsivc {

enum class PenaltyFamily { scad, lasso };

std::string_view to_string(PenaltyFamily family);
PenaltyFamily parse_penalty_family(std::string_view name);

inline constexpr double kDefaultScadA = 3.7;

/// Penalty family plus tuning parameters.
///
/// `lambda` is the base value. The per-coefficient vectors hold lambda_{1l}
/// (one per phi component), lambda_{2h} (per theta) and lambda_{3k} (per
/// coefficient function); an empty vector means "use `lambda` for every
/// entry of that block".
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::scad;
  double a = kDefaultScadA;
  double lambda = 0.0;
  Eigen::VectorXd lambda_phi;
  Eigen::VectorXd lambda_theta;
  Eigen::VectorXd lambda_gamma;

  /// Throws ConfigError on a <= 2 (SCAD) or any negative lambda.
  void validate() const;

  double for_phi(Eigen::Index l) const { return pick(lambda_phi, l); }
  double for_theta(Eigen::Index h) const { return pick(lambda_theta, h); }
  double for_gamma(Eigen::Index k) const { return pick(lambda_gamma, k); }

  /// True when every tuning parameter is zero.
  bool disabled() const;

 private:
  double pick(const Eigen::VectorXd& v, Eigen::Index i) const {
    return v.size() == 0 ? lambda : v(i);
  }
};

/// SCAD derivative lambda { I(w <= lambda) + (a lambda - w)_+ / ((a-1) lambda) I(w > lambda) }.
double scad_deriv(double lambda, double a, double w);

/// SCAD value, the integral of scad_deriv from 0 to w.
double scad_value(double lambda, double a, double w);

double penalty_deriv(PenaltyFamily family, double a, double lambda, double w);
double penalty_value(PenaltyFamily family, double a, double lambda, double w);

/// Coefficient p'(|w0|) / |w0| of the local quadratic approximation.
/// Returns 0 when lambda == 0; throws DomainError when w0 <= 0 otherwise.
double lqa_weight(PenaltyFamily family, double a, double lambda, double w0);

/// Diagonal LQA weights for one round: phi and theta entries, and one scalar
/// per coefficient function (multiplying H). Components that are exactly zero
/// are treated as removed and receive weight 0.
struct LqaWeights {
  Eigen::VectorXd phi;
  Eigen::VectorXd theta;
  Eigen::VectorXd gamma;
};

LqaWeights lqa_weights(const PenaltySpec& spec, const Eigen::VectorXd& phi,
                       const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& gamma_hnorms);

/// Sigma(phi) and Sigma(alpha) as dense matrices. Sigma(alpha) is
/// diag(theta weights) followed by one weight * H block per column of
/// `gamma` (L x q, column k = gamma_k).
struct WeightMatrices {
  Eigen::MatrixXd sigma_phi;
  Eigen::MatrixXd sigma_alpha;
};

WeightMatrices build_weight_matrices(const Eigen::VectorXd& phi,
                                     const Eigen::VectorXd& theta,
                                     const Eigen::MatrixXd& gamma,
                                     const PenaltySpec& spec,
                                     const Eigen::MatrixXd& gram);

}  // namespace plsivc
