#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "plsivc/model.hpp"
#include "plsivc/penalty.hpp"
#include "plsivc/spline_basis.hpp"

namespace plsivc {

/// Which components are free to be nonzero: phi entries (p-1), theta
/// entries (d) and whole coefficient functions (q).
struct Support {
  std::vector<bool> phi;
  std::vector<bool> theta;
  std::vector<bool> gamma;

  static Support all(Eigen::Index p, Eigen::Index d, Eigen::Index q);

  /// Support of beta itself: entry 0 always, then the phi mask.
  std::vector<bool> beta() const;

  bool operator==(const Support&) const = default;
};

struct FitConfig {
  double zero_threshold = 1e-2;
  int max_iterations = 50;
  /// Max-abs change of (phi, theta, gamma) between outer iterations.
  double tolerance = 1e-4;
  /// Relative ridge added to the normal matrix when it is near singular.
  double ridge = 1e-8;
  PenaltySpec penalty;
  int degree = 3;
  int num_interior = 2;

  /// Gauss-Newton iterations allowed inside one phi step.
  int max_phi_newton = 1;

  /// Multi-start used when fit_unpenalized gets no starting index: this many
  /// random directions (plus the OLS direction and e_1) are scored by their
  /// profile residual sum of squares, and the best `init_refine` are iterated
  /// to convergence.
  int init_candidates = 32;
  int init_refine = 3;
  std::uint64_t init_seed = 20250101;

  /// When set, components outside the support are held at zero, penalties
  /// are ignored and no thresholding happens.
  std::optional<Support> fixed_support;

  /// Throws ConfigError on invalid settings.
  void validate() const;
};

/// One outer iteration of the alternating algorithm. The surrogate is the
/// LQA objective of that round (residual sum of squares plus the quadratic
/// penalty terms) with the round's knots held fixed.
struct IterationRecord {
  double surrogate_after_alpha = 0.0;
  double surrogate_after_phi = 0.0;
  double max_change = 0.0;
  bool phi_stalled = false;
  bool jittered = false;
};

struct FitResult {
  Coefficients coef;
  IndexParam phi;
  KnotVector knots{0, 0.0, 1.0, {}};
  Eigen::MatrixXd gram;
  Eigen::VectorXd gamma_hnorm;

  /// Nonzero components at the end of the fit.
  Support selected;

  /// g_k on `grid` (20 equally spaced points over the knot range).
  std::vector<double> grid;
  Eigen::MatrixXd g_grid;

  int iterations = 0;
  bool converged = false;
  double rss = 0.0;
  /// Residual sum of squares plus n * sum of penalty values.
  double objective = 0.0;
  /// Data points evaluated outside the knot range (clamped).
  std::size_t out_of_range = 0;
  std::vector<IterationRecord> trace;

  Eigen::VectorXd predict(const Dataset& data) const;
};

/// Current iterate of the alternating algorithm.
struct Estimates {
  IndexParam phi;
  Eigen::VectorXd theta;
  Eigen::MatrixXd gamma;        // L x q
  Eigen::VectorXd gamma_hnorm;  // ||gamma_k||_H under the matching knots
  Support active;
};

/// Minimizes the residual sum of squares with all penalties zero.
/// Alternates exact least squares in alpha with Gauss-Newton steps in phi;
/// nothing is thresholded. Without `phi_init` a multi-start search picks the
/// starting direction.
FitResult fit_unpenalized(const Dataset& data, const FitConfig& config,
                          const std::optional<IndexParam>& phi_init = std::nullopt);

/// Full penalized fit: computes the unpenalized estimate, then iterates
/// alpha step, phi step and thresholding until convergence.
FitResult fit_penalized(const Dataset& data, const FitConfig& config);

/// As above, starting from an already computed unpenalized fit.
FitResult fit_penalized(const Dataset& data, const FitConfig& config,
                        const FitResult& unpenalized);

/// Closed-form alpha minimizing
///   sum_i (Y_i - W~_i(phi)^T alpha)^2 + (n/2) alpha^T Sigma(alpha0) alpha
/// over the active components; inactive ones are returned as zero.
/// `jittered` reports whether the ridge fallback was needed.
struct AlphaStep {
  Eigen::VectorXd theta;
  Eigen::MatrixXd gamma;
  bool jittered = false;
};

AlphaStep step_alpha(const Dataset& data, const KnotVector& kv,
                     const IndexParam& phi, const Eigen::MatrixXd& gram,
                     const LqaWeights& weights, const Support& active,
                     double ridge);

/// The alpha-step objective and its gradient with respect to the full alpha
/// vector (theta; gamma_1; ...; gamma_q).
double alpha_objective(const Dataset& data, const KnotVector& kv,
                       const IndexParam& phi, const Eigen::MatrixXd& gram,
                       const LqaWeights& weights, const Eigen::VectorXd& theta,
                       const Eigen::MatrixXd& gamma);
Eigen::VectorXd alpha_gradient(const Dataset& data, const KnotVector& kv,
                               const IndexParam& phi, const Eigen::MatrixXd& gram,
                               const LqaWeights& weights, const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& gamma);

/// Q(phi) = sum_i (Y_i - W~_i(phi)^T alpha)^2 + (n/2) sum_l w_l phi_l^2.
double phi_objective(const Dataset& data, const KnotVector& kv,
                     const Eigen::VectorXd& theta, const Eigen::MatrixXd& gamma,
                     const Eigen::VectorXd& phi, const Eigen::VectorXd& phi_weights);

/// Analytic gradient of phi_objective (chain rule through dB/du and J_phi).
Eigen::VectorXd phi_gradient(const Dataset& data, const KnotVector& kv,
                             const Eigen::VectorXd& theta, const Eigen::MatrixXd& gamma,
                             const Eigen::VectorXd& phi, const Eigen::VectorXd& phi_weights);

struct PhiStep {
  IndexParam phi;
  bool stalled = false;
  int newton_steps = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;
};

/// Damped Gauss-Newton descent on phi_objective over the active phi entries.
/// Step halving keeps ||phi|| <= 1 - 1e-6 and enforces decrease; if 30
/// halvings of the first step fail, phi0 is returned with `stalled` set.
PhiStep step_phi(const Dataset& data, const KnotVector& kv,
                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& gamma,
                 const IndexParam& phi0, const Eigen::VectorXd& phi_weights,
                 const std::vector<bool>& phi_active, int max_newton = 20);

/// Zeroes |phi_l| < eps, |theta_h| < eps and blocks with ||gamma_k||_H < eps,
/// and removes them from the active set.
void apply_threshold(Estimates& est, double eps);

}  // namespace plsivc
