#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plsivc/csv.hpp"
#include "plsivc/estimator.hpp"
#include "plsivc/model.hpp"
#include "plsivc/tuning.hpp"

namespace plsivc {

/// Index covariates in model order.
inline const std::vector<std::string> kBodyFatCircumferences{
    "neck", "chest", "abdomen", "hip", "thigh", "knee", "ankle", "biceps", "forearm", "wrist"};

/// Every column the source file must provide.
std::vector<std::string> bodyfat_columns();

/// |495/density - 450 - bodyfat|: disagreement between the recorded body fat
/// and the Siri equation applied to the recorded density.
double siri_consistency(double density, double bodyfat);

struct CleaningRules {
  /// Drop bodyfat <= min_bodyfat or height < min_height.
  bool drop_type_errors = true;
  double min_bodyfat = 1.0;
  double min_height = 40.0;
  /// Drop siri_consistency > siri_tolerance.
  bool drop_inconsistent = true;
  double siri_tolerance = 4.0;
};

struct Exclusion {
  std::size_t row = 0;  // 1-based data row in the source file
  std::string reason;
};

struct BodyFatData {
  /// Y = log(bodyfat), U = (age, weight), Z = (1, height), X = circumferences.
  Dataset data;
  std::size_t source_rows = 0;
  std::vector<std::size_t> kept_rows;  // 1-based
  std::vector<Exclusion> excluded;
  bool standardized = false;
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_scale;
  /// Cleaned rows with every source column, in source column order.
  CsvTable cleaned;
};

/// Applies the cleaning rules and maps the columns to model roles. Throws
/// DataError on a missing column, a non-positive body fat that survives
/// cleaning, or fewer than 50 clean rows.
BodyFatData load_bodyfat(const CsvTable& table, const CleaningRules& rules = {},
                         bool standardize = true);
BodyFatData load_bodyfat(const std::filesystem::path& path, const CleaningRules& rules = {},
                         bool standardize = true);

/// Ordinary least squares with an intercept.
struct LinearFit {
  std::vector<std::string> names;  // "(intercept)" first
  Eigen::VectorXd coef;
  double r2 = 0.0;
};

/// 1 - RSS/TSS.
double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted);

/// Y on every covariate: age, weight, height and the circumferences.
LinearFit bodyfat_linear_baseline(const BodyFatData& bf);

struct BodyFatReport {
  Selection selection;
  /// beta-hat for the coefficient table, oriented so its largest entry is
  /// positive (the fit itself keeps the first-nonzero-positive rule). When
  /// `index_flipped`, the matching link functions are g(-u).
  Eigen::VectorXd table_beta;
  bool index_flipped = false;
  double r2 = 0.0;
  LinearFit baseline;
};

BodyFatReport fit_bodyfat(const BodyFatData& bf, const FitConfig& config,
                          const TuningGrid& grid, std::uint64_t seed);

}  // namespace plsivc
