#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "plsivc/estimator.hpp"
#include "plsivc/model.hpp"
#include "plsivc/tuning.hpp"

namespace plsivc {

enum class Method { scad, lasso, oracle };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Simulation design with p = d = q = 10:
///   beta0 = (1/3, 2/3, 2/3, 0, ...), theta0 = (2, 1.6, 0.8, 0, ...),
///   g1(u) = 2 cos(pi u), g2(u) = 1 + 3 u^2, g3 = ... = g10 = 0,
///   Z ~ N(0, 4 * 0.5^|k-l|), U ~ N(0, 3 * 0.5^|k-l|), X ~ U(-0.75, 0.75)^p.
struct Truth {
  Eigen::VectorXd beta;
  Eigen::VectorXd theta;
  Support support;
  Eigen::MatrixXd sigma_u;
  Eigen::MatrixXd sigma_z;

  /// g_k(u) for k = 0..q-1.
  double g(Eigen::Index k, double u) const;
  Eigen::Index p() const { return beta.size(); }
  Eigen::Index d() const { return theta.size(); }
  Eigen::Index q() const { return sigma_z.rows(); }
};

Truth default_truth();

/// scale * rho^|k-l|
Eigen::MatrixXd ar1_covariance(Eigen::Index dim, double scale, double rho);

struct SimConfig {
  Eigen::Index n = 200;
  double sigma = 0.5;
  int reps = 100;
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::scad};
  int grid_points = 20;
  double grid_lower = -1.2;
  double grid_upper = 1.2;
  TuningGrid tuning;
  FitConfig fit;
  int threads = 1;
  /// Permits sigma = 0 and n < 50 for validation runs.
  bool validation = false;

  /// Throws ConfigError unless n >= 50, reps >= 1, sigma > 0 (see
  /// `validation`), grid_points >= 2 and threads >= 1.
  void validate() const;
  std::vector<double> grid() const;
};

/// Replication r of the design. Deterministic in (cfg.seed, r).
Dataset gen_dataset(const SimConfig& cfg, const Truth& truth, int replication);

/// Inner product of the sign-normalized estimate with beta0.
double metric_inner_product(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta0);
/// (theta_hat - theta0)^T Sigma_U (theta_hat - theta0).
double metric_gmse(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta0,
                   const Eigen::MatrixXd& sigma_u);
/// sqrt(mean_j (ghat_j - g_j)^2).
double metric_rase(const Eigen::VectorXd& g_hat, const Eigen::VectorXd& g_true);

struct Counts {
  int correct = 0;    // true zeros estimated as zero
  int incorrect = 0;  // true nonzeros estimated as zero
};
Counts metric_counts(const std::vector<bool>& estimated_nonzero,
                     const std::vector<bool>& true_nonzero);

/// Unpenalized fit on the submodel that keeps exactly the supported
/// columns, with zeros filled back into full-length estimates.
/// support.phi refers to beta entries 2..p; beta_1 is always kept. A
/// full-length `phi_init` is restricted to the submodel.
FitResult oracle_fit(const Dataset& data, const Support& support, const FitConfig& config,
                     const std::optional<IndexParam>& phi_init = std::nullopt);

/// Oracle with K chosen by V-fold CV of the unpenalized submodel fit.
KnotSelection oracle_select(const Dataset& data, const Support& support,
                            const FitConfig& config, const TuningGrid& grid,
                            std::uint64_t seed);

struct ReplicationRecord {
  int replication = 0;
  Method method = Method::scad;
  bool ok = false;
  std::string error;
  int num_interior = 0;
  double lambda = 0.0;
  double inner_product = 0.0;
  Counts beta;
  Counts theta;
  Counts g;
  double gmse = 0.0;
  double rase1 = 0.0;
  double rase2 = 0.0;
  Eigen::MatrixXd g_hat;  // grid x 2: g1 and g2 estimates on the reporting grid
};

struct MethodSummary {
  Method method = Method::scad;
  int completed = 0;
  int failures = 0;
  double mean = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double c_beta = 0.0;
  double i_beta = 0.0;
  double gmse = 0.0;
  double c_theta = 0.0;
  double i_theta = 0.0;
  double c_g = 0.0;
  double i_g = 0.0;
  double rase1 = 0.0;
  double rase2 = 0.0;
  Eigen::MatrixXd g_mean;  // grid x 2
};

struct SimSummary {
  std::vector<double> grid;
  Eigen::MatrixXd g_true;  // grid x 2
  std::vector<MethodSummary> methods;
  /// Replication-major, then in cfg.methods order.
  std::vector<ReplicationRecord> records;

  const MethodSummary& at(Method m) const;
};

/// One replication for every configured method. Never throws for fit
/// failures; they are recorded in the returned records.
std::vector<ReplicationRecord> run_replication(const SimConfig& cfg, const Truth& truth,
                                               int replication);

/// R replications on cfg.threads workers, aggregated in replication order so
/// the result does not depend on the worker count.
SimSummary run_monte_carlo(const SimConfig& cfg, const Truth& truth = default_truth());

/// Aggregates records (already ordered) into per-method summaries.
SimSummary summarize(const SimConfig& cfg, const Truth& truth,
                     std::vector<ReplicationRecord> records);

}  // namespace plsivc
