#include "plsivc/bodyfat.hpp"

#include <cmath>
#include <sstream>

#include "plsivc/errors.hpp"

namespace plsivc {

namespace {

constexpr std::size_t kMinCleanRows = 50;

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::string> bodyfat_columns() {
  std::vector<std::string> cols{"density", "bodyfat", "age", "weight", "height"};
  cols.insert(cols.end(), kBodyFatCircumferences.begin(), kBodyFatCircumferences.end());
  return cols;
}

double siri_consistency(double density, double bodyfat) {
  if (!(density > 0.0)) throw DomainError("density must be positive");
  return std::abs(495.0 / density - 450.0 - bodyfat);
}

BodyFatData load_bodyfat(const CsvTable& table, const CleaningRules& rules, bool standardize) {
  const std::vector<std::string> needed = bodyfat_columns();
  std::vector<std::string> missing;
  for (const auto& c : needed) {
    if (!table.find(c)) missing.push_back(c);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& c : missing) list += (list.empty() ? "" : ", ") + c;
    throw DataError("body-fat input is missing column(s): " + list);
  }

  const auto& density = table.column("density");
  const auto& bodyfat = table.column("bodyfat");
  const auto& height = table.column("height");

  BodyFatData out;
  out.source_rows = table.rows();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    std::string reason;
    if (rules.drop_type_errors && bodyfat[i] <= rules.min_bodyfat) {
      reason = "bodyfat " + fmt(bodyfat[i]) + " <= " + fmt(rules.min_bodyfat);
    } else if (rules.drop_type_errors && height[i] < rules.min_height) {
      reason = "height " + fmt(height[i]) + " < " + fmt(rules.min_height);
    } else if (rules.drop_inconsistent) {
      if (!(density[i] > 0.0)) {
        reason = "non-positive density";
      } else {
        const double gap = siri_consistency(density[i], bodyfat[i]);
        if (gap > rules.siri_tolerance) {
          reason = "Siri discrepancy " + fmt(gap) + " > " + fmt(rules.siri_tolerance);
        }
      }
    }
    if (reason.empty()) {
      keep.push_back(i);
    } else {
      out.excluded.push_back({i + 1, reason});
    }
  }
  if (keep.size() < kMinCleanRows) {
    throw DataError("only " + std::to_string(keep.size()) +
                    " rows remain after cleaning; at least 50 are required");
  }

  out.cleaned.header = table.header;
  out.cleaned.columns.resize(table.columns.size());
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    for (std::size_t i : keep) out.cleaned.columns[j].push_back(table.columns[j][i]);
  }
  for (std::size_t i : keep) out.kept_rows.push_back(i + 1);

  const auto n = static_cast<Eigen::Index>(keep.size());
  Dataset& d = out.data;
  d.y.resize(n);
  const auto& bf = out.cleaned.column("bodyfat");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(bf[i] > 0.0)) {
      throw DataError("bodyfat must be positive for the log response (row " +
                      std::to_string(out.kept_rows[i]) + ")");
    }
    d.y(i) = std::log(bf[i]);
  }
  const auto take = [&](const std::vector<std::string>& names) {
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto& col = out.cleaned.column(names[j]);
      for (Eigen::Index i = 0; i < n; ++i) m(i, static_cast<Eigen::Index>(j)) = col[i];
    }
    return m;
  };
  d.u = take({"age", "weight"});
  d.u_names = {"Age", "Weight"};
  d.z.resize(n, 2);
  d.z.col(0).setOnes();
  d.z.col(1) = take({"height"});
  d.z_names = {"(intercept)", "Height"};
  d.x = take(kBodyFatCircumferences);
  for (const auto& c : kBodyFatCircumferences) {
    std::string name = c;
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    d.x_names.push_back(name);
  }

  out.standardized = standardize;
  out.x_mean = Eigen::VectorXd::Zero(d.p());
  out.x_scale = Eigen::VectorXd::Ones(d.p());
  if (standardize) {
    for (Eigen::Index j = 0; j < d.p(); ++j) {
      const double mean = d.x.col(j).mean();
      const double var =
          (d.x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
      const double sd = std::sqrt(var);
      if (!(sd > 0.0)) throw DataError("constant index covariate '" + d.x_names[j] + "'");
      out.x_mean(j) = mean;
      out.x_scale(j) = sd;
      d.x.col(j) = (d.x.col(j).array() - mean) / sd;
    }
  }
  d.validate();
  return out;
}

BodyFatData load_bodyfat(const std::filesystem::path& path, const CleaningRules& rules,
                         bool standardize) {
  return load_bodyfat(read_csv(path), rules, standardize);
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted) {
  const double tss = (y.array() - y.mean()).square().sum();
  return 1.0 - (y - fitted).squaredNorm() / tss;
}

LinearFit bodyfat_linear_baseline(const BodyFatData& bf) {
  const Dataset& d = bf.data;
  const Eigen::Index n = d.n();
  Eigen::MatrixXd design(n, 1 + d.d() + 1 + d.p());
  design.col(0).setOnes();
  design.middleCols(1, d.d()) = d.u;
  design.col(1 + d.d()) = d.z.col(1);
  design.rightCols(d.p()) = d.x;
  LinearFit lm;
  lm.names.push_back("(intercept)");
  lm.names.insert(lm.names.end(), d.u_names.begin(), d.u_names.end());
  lm.names.push_back(d.z_names[1]);
  lm.names.insert(lm.names.end(), d.x_names.begin(), d.x_names.end());
  lm.coef = design.colPivHouseholderQr().solve(d.y);
  lm.r2 = r_squared(d.y, design * lm.coef);
  return lm;
}

BodyFatReport fit_bodyfat(const BodyFatData& bf, const FitConfig& config,
                          const TuningGrid& grid, std::uint64_t seed) {
  BodyFatReport rep;
  rep.selection = select(bf.data, grid, config, seed);
  rep.r2 = r_squared(bf.data.y, rep.selection.fit.predict(bf.data));
  const Eigen::VectorXd& beta = rep.selection.fit.coef.beta;
  Eigen::Index top = 0;
  beta.cwiseAbs().maxCoeff(&top);
  rep.index_flipped = beta(top) < 0.0;
  // + 0.0 keeps flipped zeros from printing as -0.
  rep.table_beta = rep.index_flipped ? Eigen::VectorXd(-beta.array() + 0.0) : beta;
  rep.baseline = bodyfat_linear_baseline(bf);
  return rep;
}

}  // namespace plsivc
