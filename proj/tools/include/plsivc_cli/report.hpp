#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "plsivc/bodyfat.hpp"
#include "plsivc/estimator.hpp"
#include "plsivc/simulation.hpp"
#include "plsivc/tuning.hpp"

namespace plsivc::cli {

using nlohmann::json;

/// Everything needed to rerun a command. Deliberately leaves out the worker
/// count and timestamps so that outputs do not depend on them.
struct Manifest {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  std::optional<std::string> input_digest;  // SHA-256 of the input file
};

json to_json(const Manifest& m);

json to_json(const FitConfig& c);
FitConfig fit_config_from_json(const json& j);

json to_json(const TuningGrid& g);
TuningGrid tuning_grid_from_json(const json& j);

/// SimConfig without `threads`.
json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const json& j);

/// beta, theta, gamma, selected, converged, iterations, rss, objective, plus
/// covariate names and the knot sequence.
json to_json(const FitResult& fit, const Dataset& names);

/// K, lambda, score per grid point.
json to_json(const std::vector<CvPoint>& table);

/// Per-method aggregates in the column order of the simulation tables.
json summary_json(const SimSummary& s);

/// Records, reporting grid and true curves; the input of `plot-data`.
json campaign_json(const SimSummary& s);
std::vector<ReplicationRecord> records_from_json(const json& j);

void write_summary_csv(std::ostream& out, const SimSummary& s, const SimConfig& cfg);
/// replication, method, ok, rase1, rase2, rase
void write_rase_csv(std::ostream& out, const SimSummary& s);
/// u, g1_true, g1_hat_mean, g2_true, g2_hat_mean
void write_curve_csv(std::ostream& out, const SimSummary& s, Method m);
void write_cv_csv(std::ostream& out, const std::vector<CvPoint>& table);

/// Covariate, PLSIVC estimate and linear-model estimate for U and X.
struct CoefficientRow {
  std::string covariate;
  double plsivc = 0.0;
  double linear = 0.0;
};
std::vector<CoefficientRow> bodyfat_table(const BodyFatData& bf, const BodyFatReport& rep);
json bodyfat_json(const BodyFatData& bf, const BodyFatReport& rep);
void write_bodyfat_csv(std::ostream& out, const std::vector<CoefficientRow>& rows,
                       const BodyFatReport& rep);
void write_exclusions_csv(std::ostream& out, const BodyFatData& bf);

/// Writes `text` to `path`, creating parent directories. Throws Error on
/// failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace plsivc::cli
