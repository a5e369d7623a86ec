#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plsivc/estimator.hpp"
#include "plsivc/model.hpp"
#include "plsivc/penalty.hpp"

namespace plsivc {

/// Unpenalized magnitudes below this get lambda capped at kAdaptiveCap * lambda.
inline constexpr double kAdaptiveFloor = 1e-8;
inline constexpr double kAdaptiveCap = 1e6;

/// {max(1, floor(n^(1/5)) - 1), ..., floor(n^(1/5)) + 2}
std::vector<int> default_knot_grid(Eigen::Index n);

/// `count` log-spaced values from lo * scale to hi * scale.
std::vector<double> log_lambda_grid(double scale, int count = 20, double lo = 1e-3,
                                    double hi = 2.0);

struct TuningGrid {
  /// Empty means log_lambda_grid(sigma_hat) with sigma_hat the residual scale
  /// of the unpenalized fit at the first feasible K.
  std::vector<double> lambdas;
  /// Empty means default_knot_grid(n).
  std::vector<int> knots;
  int folds = 5;

  /// Throws ConfigError on empty or non-positive entries or V outside [2, n].
  void validate(Eigen::Index n) const;
};

/// lambda_{1l} = lambda/|phi_l|, lambda_{2h} = lambda/|theta_h|,
/// lambda_{3k} = lambda/||gamma_k||_H from an unpenalized fit.
PenaltySpec adaptive_lambdas(double lambda, const FitResult& unpenalized,
                             PenaltyFamily family, double a = kDefaultScadA);

/// Held-out index sets (each sorted) for V folds; a deterministic function of
/// (seed, n, V). Fold sizes differ by at most one.
std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int folds,
                                                  std::uint64_t seed);

/// Unpenalized fits shared by every lambda and penalty family evaluated at
/// the same K: the full-data fit and one fit per training fold. Fold fits
/// start from the full-data index estimate.
class CvCache {
 public:
  CvCache(const Dataset& data, FitConfig base, int folds, std::uint64_t seed);

  const Dataset& data() const { return data_; }
  const FitConfig& base_config() const { return base_; }
  const std::vector<std::vector<Eigen::Index>>& folds() const { return folds_; }

  /// Config for K interior knots, optionally with a penalty.
  FitConfig config_for(int num_interior) const;

  /// Throws whatever the fit throws; failures are cached and rethrown.
  const FitResult& full(int num_interior);
  const FitResult& fold(int num_interior, int fold);
  const Dataset& train(int fold);
  const Dataset& test(int fold);

 private:
  struct Entry {
    std::optional<FitResult> fit;
    std::string error;
    int kind = 3;  // 0 ok, 1 data, 2 numerical, 3 other
  };
  const FitResult& unwrap(const Entry& e) const;

  const Dataset& data_;
  FitConfig base_;
  std::vector<std::vector<Eigen::Index>> folds_;
  std::vector<std::optional<Dataset>> train_;
  std::vector<std::optional<Dataset>> test_;
  std::map<int, Entry> full_;
  std::map<std::pair<int, int>, Entry> fold_;
};

/// Sum over folds of held-out squared prediction errors of the penalized fit
/// at (K, lambda) with adaptive per-coefficient lambdas taken from the
/// training-fold unpenalized fit. Throws DataError("insufficient fold size")
/// when a training fold is too small.
double cv_score(CvCache& cache, int num_interior, double lambda, PenaltyFamily family,
                double a = kDefaultScadA);

/// Convenience overload building its own cache; family and a come from
/// config.penalty.
double cv_score(const Dataset& data, int num_interior, double lambda, int folds,
                const FitConfig& config, std::uint64_t seed);

/// Same score for the unpenalized fit (honours config.fixed_support).
double cv_score_unpenalized(CvCache& cache, int num_interior);

struct CvPoint {
  int num_interior = 0;
  double lambda = 0.0;
  double score = 0.0;
  bool ok = false;
  std::string error;
};

struct Selection {
  int num_interior = 0;
  double lambda = 0.0;
  double sigma_hat = 0.0;
  PenaltySpec penalty;
  FitResult fit;
  FitResult unpenalized;
  std::vector<CvPoint> table;  // grid order: K ascending, then lambda ascending
};

/// Grid search minimizing cv_score; ties go to smaller K, then smaller
/// lambda. The winner is refit on the full data. Throws NumericalError
/// listing the failures when no grid point could be scored.
Selection select(CvCache& cache, const TuningGrid& grid, PenaltyFamily family,
                 double a = kDefaultScadA);
Selection select(const Dataset& data, const TuningGrid& grid, const FitConfig& config,
                 std::uint64_t seed);

struct KnotSelection {
  int num_interior = 0;
  FitResult fit;
  std::vector<CvPoint> table;
};

/// Chooses K for the unpenalized fit by the same V-fold criterion.
KnotSelection select_knots_unpenalized(CvCache& cache, const std::vector<int>& knots);

}  // namespace plsivc
