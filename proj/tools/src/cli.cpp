#include "plsivc_cli/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "plsivc/bodyfat.hpp"
#include "plsivc/csv.hpp"
#include "plsivc/errors.hpp"
#include "plsivc/manifest.hpp"
#include "plsivc/simulation.hpp"
#include "plsivc/tuning.hpp"
#include "plsivc_cli/report.hpp"

namespace plsivc::cli {

namespace fs = std::filesystem;

namespace {

struct Global {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string format = "csv";
  int threads = 1;
};

struct Tuning {
  std::string penalty = "scad";
  double a = kDefaultScadA;
  std::vector<double> lambdas;
  std::vector<int> knots;
  int folds = 5;
  int degree = 3;

  TuningGrid grid() const { return {lambdas, knots, folds}; }
};

struct Roles {
  std::string input;
  std::string y = "y";
  std::vector<std::string> u;
  std::vector<std::string> x;
  std::vector<std::string> z{"1"};
};

void add_tuning(CLI::App* cmd, Tuning& t, bool with_penalty) {
  if (with_penalty) {
    cmd->add_option("--penalty", t.penalty, "scad or lasso")
        ->check(CLI::IsMember({"scad", "lasso"}, CLI::ignore_case))
        ->capture_default_str();
    cmd->add_option("--a", t.a, "SCAD shape parameter")->capture_default_str();
    cmd->add_option("--lambdas", t.lambdas, "Lambda candidates (default: 20 log-spaced)")
        ->delimiter(',');
  }
  cmd->add_option("--knots", t.knots, "Interior knot counts to try (default from n)")
      ->delimiter(',');
  cmd->add_option("--folds", t.folds, "Cross-validation folds")->capture_default_str();
  cmd->add_option("--degree", t.degree, "Spline degree")->capture_default_str();
}

void add_roles(CLI::App* cmd, Roles& r) {
  cmd->add_option("--input", r.input, "CSV file with a header row")->required();
  cmd->add_option("--y", r.y, "Response column")->capture_default_str();
  cmd->add_option("--u", r.u, "Linear covariates")->delimiter(',');
  cmd->add_option("--x", r.x, "Index covariates (at least two)")->delimiter(',')->required();
  cmd->add_option("--z", r.z, "Varying-coefficient covariates; 1 is a constant column")
      ->delimiter(',')
      ->capture_default_str();
}

json roles_json(const Roles& r) {
  return {{"input", fs::path(r.input).filename().string()},
          {"y", r.y},
          {"u", r.u},
          {"x", r.x},
          {"z", r.z}};
}

Dataset load_roles(const Roles& r) {
  return dataset_from_table(read_csv(r.input), ColumnRoles{r.y, r.u, r.x, r.z});
}

int floor_fifth_root(Eigen::Index n) {
  return static_cast<int>(std::floor(std::pow(static_cast<double>(n), 0.2) + 1e-9));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

class Outputs {
 public:
  Outputs(const Global& g, Manifest m, std::ostream& out)
      : dir_(g.out_dir), json_(g.format == "json"), manifest_(std::move(m)), out_(out) {}

  bool json_format() const { return json_; }
  json manifest() const { return to_json(manifest_); }

  void text(const std::string& name, const std::string& body) {
    write_text(dir_ / name, body);
    out_ << "wrote " << (dir_ / name).string() << '\n';
  }

  // Embeds the manifest under "manifest".
  void json_file(const std::string& name, json body) {
    body["manifest"] = manifest();
    text(name, body.dump(2) + '\n');
  }

  void finish() { text("manifest.json", manifest().dump(2) + '\n'); }

 private:
  fs::path dir_;
  bool json_;
  Manifest manifest_;
  std::ostream& out_;
};

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

void emit_plot_data(Outputs& o, const SimConfig& cfg, const SimSummary& s) {
  o.text("rase.csv", render([&](std::ostream& os) { write_rase_csv(os, s); }));
  for (Method m : cfg.methods) {
    o.text("curves_" + lower(to_string(m)) + ".csv",
           render([&](std::ostream& os) { write_curve_csv(os, s, m); }));
  }
}

void print_summary(std::ostream& out, const SimSummary& s) {
  out << std::left << std::setw(8) << "method" << std::right;
  for (const char* h : {"mean", "bias", "sd", "C", "I", "GMSE", "C", "I", "fail"}) {
    out << std::setw(11) << h;
  }
  out << '\n';
  for (const auto& m : s.methods) {
    out << std::left << std::setw(8) << to_string(m.method) << std::right << std::fixed
        << std::setprecision(5) << std::setw(11) << m.mean << std::setw(11) << m.bias
        << std::setw(11) << m.sd << std::setprecision(3) << std::setw(11) << m.c_beta
        << std::setw(11) << m.i_beta << std::setprecision(5) << std::setw(11) << m.gmse
        << std::setprecision(3) << std::setw(11) << m.c_theta << std::setw(11) << m.i_theta
        << std::setw(11) << m.failures << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

struct SimFlags {
  Eigen::Index n = 200;
  double sigma = 0.5;
  int reps = 100;
  std::vector<std::string> methods{"scad", "lasso", "oracle"};
  int grid_points = 20;
  double grid_lower = -1.2;
  double grid_upper = 1.2;
  bool validation = false;
  Tuning tuning;
};

int cmd_simulate(const Global& g, const SimFlags& f, std::ostream& out) {
  SimConfig cfg;
  cfg.n = f.n;
  cfg.sigma = f.sigma;
  cfg.reps = f.reps;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.methods.clear();
  for (const auto& m : f.methods) cfg.methods.push_back(parse_method(m));
  cfg.grid_points = f.grid_points;
  cfg.grid_lower = f.grid_lower;
  cfg.grid_upper = f.grid_upper;
  cfg.validation = f.validation;
  cfg.tuning = f.tuning.grid();
  cfg.fit.degree = f.tuning.degree;
  cfg.validate();

  const SimSummary s = run_monte_carlo(cfg);

  Outputs o(g, Manifest{"simulate", to_json(cfg), cfg.seed, std::nullopt}, out);
  if (o.json_format()) {
    o.json_file("summary.json", {{"summary", summary_json(s)}});
  } else {
    o.text("summary.csv", render([&](std::ostream& os) { write_summary_csv(os, s, cfg); }));
  }
  emit_plot_data(o, cfg, s);
  o.json_file("campaign.json", campaign_json(s));
  o.finish();
  print_summary(out, s);
  return kExitOk;
}

int cmd_plot_data(const Global& g, const std::string& campaign, std::ostream& out) {
  std::ifstream in(campaign, std::ios::binary);
  if (!in) throw DataError("cannot open '" + campaign + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("'" + campaign + "' is not valid JSON: " + e.what());
  }
  SimConfig cfg;
  std::vector<ReplicationRecord> records;
  try {
    cfg = sim_config_from_json(j.at("manifest").at("config"));
    records = records_from_json(j);
  } catch (const json::exception& e) {
    throw DataError("'" + campaign + "' is not a campaign file: " + e.what());
  }
  const SimSummary s = summarize(cfg, default_truth(), std::move(records));
  json config = {{"campaign", fs::path(campaign).filename().string()}};
  Outputs o(g, Manifest{"plot-data", config, cfg.seed, sha256_file(campaign)}, out);
  emit_plot_data(o, cfg, s);
  o.finish();
  return kExitOk;
}

struct FitFlags {
  Roles roles;
  std::string penalty = "scad";
  double a = kDefaultScadA;
  double lambda = 0.0;
  int num_interior = -1;
  int degree = 3;
  bool uniform = false;
};

int cmd_fit(const Global& g, const FitFlags& f, std::ostream& out) {
  const Dataset data = load_roles(f.roles);
  FitConfig cfg;
  cfg.degree = f.degree;
  cfg.num_interior = f.num_interior >= 0 ? f.num_interior : floor_fifth_root(data.n());
  cfg.init_seed = g.seed;
  const bool penalized = f.penalty != "none";
  if (penalized && !(f.lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  cfg.validate();

  const FitResult unpen = fit_unpenalized(data, cfg);
  FitResult fit = unpen;
  if (penalized) {
    const PenaltyFamily family = parse_penalty_family(f.penalty);
    if (f.uniform) {
      cfg.penalty = PenaltySpec{family, f.a, f.lambda, {}, {}, {}};
    } else {
      cfg.penalty = adaptive_lambdas(f.lambda, unpen, family, f.a);
    }
    fit = fit_penalized(data, cfg, unpen);
  }

  json config{{"roles", roles_json(f.roles)},
              {"penalty", f.penalty},
              {"lambda", f.lambda},
              {"adaptive", !f.uniform},
              {"fit", to_json(cfg)}};
  Outputs o(g, Manifest{"fit", config, g.seed, sha256_file(f.roles.input)}, out);
  o.json_file("fit.json", to_json(fit, data));
  o.finish();
  out << "rss " << format_double(fit.rss) << ", iterations " << fit.iterations
      << (fit.converged ? "" : " (not converged)") << '\n';
  return kExitOk;
}

struct CvFlags {
  Roles roles;
  Tuning tuning;
};

int cmd_cv(const Global& g, const CvFlags& f, std::ostream& out) {
  const Dataset data = load_roles(f.roles);
  FitConfig base;
  base.degree = f.tuning.degree;
  base.init_seed = g.seed;
  base.penalty.family = parse_penalty_family(f.tuning.penalty);
  base.penalty.a = f.tuning.a;
  base.validate();
  const TuningGrid grid = f.tuning.grid();
  grid.validate(data.n());

  CvCache cache(data, base, grid.folds, g.seed);
  const Selection sel = select(cache, grid, base.penalty.family, base.penalty.a);

  json config{{"roles", roles_json(f.roles)}, {"tuning", to_json(grid)}, {"fit", to_json(base)}};
  Outputs o(g, Manifest{"cv", config, g.seed, sha256_file(f.roles.input)}, out);
  json selection{{"K", sel.num_interior}, {"lambda", sel.lambda}, {"sigma_hat", sel.sigma_hat}};
  if (o.json_format()) {
    o.json_file("cv.json", {{"grid", to_json(sel.table)}, {"selection", selection}});
  } else {
    o.text("cv.csv", render([&](std::ostream& os) { write_cv_csv(os, sel.table); }));
  }
  json fit = to_json(sel.fit, data);
  fit["selection"] = selection;
  o.json_file("fit.json", fit);
  o.finish();
  out << "selected K = " << sel.num_interior << ", lambda = " << format_double(sel.lambda)
      << '\n';
  return kExitOk;
}

struct BodyFatFlags {
  std::string input;
  CleaningRules rules;
  bool keep_all = false;
  bool raw = false;
  Tuning tuning;
};

int cmd_bodyfat(const Global& g, const BodyFatFlags& f, std::ostream& out) {
  CleaningRules rules = f.rules;
  if (f.keep_all) {
    rules.drop_type_errors = false;
    rules.drop_inconsistent = false;
  }
  const BodyFatData bf = load_bodyfat(fs::path(f.input), rules, !f.raw);

  FitConfig base;
  base.degree = f.tuning.degree;
  base.init_seed = g.seed;
  base.penalty.family = parse_penalty_family(f.tuning.penalty);
  base.penalty.a = f.tuning.a;
  base.validate();
  const TuningGrid grid = f.tuning.grid();
  const BodyFatReport rep = fit_bodyfat(bf, base, grid, g.seed);

  json config{{"input", fs::path(f.input).filename().string()},
              {"cleaning",
               {{"drop_type_errors", rules.drop_type_errors},
                {"min_bodyfat", rules.min_bodyfat},
                {"min_height", rules.min_height},
                {"drop_inconsistent", rules.drop_inconsistent},
                {"siri_tolerance", rules.siri_tolerance}}},
              {"standardize", !f.raw},
              {"tuning", to_json(grid)},
              {"fit", to_json(base)}};
  Outputs o(g, Manifest{"bodyfat", config, g.seed, sha256_file(f.input)}, out);
  const auto rows = bodyfat_table(bf, rep);
  if (o.json_format()) {
    o.json_file("bodyfat.json", bodyfat_json(bf, rep));
  } else {
    o.text("bodyfat.csv", render([&](std::ostream& os) { write_bodyfat_csv(os, rows, rep); }));
    o.json_file("fit.json", to_json(rep.selection.fit, bf.data));
  }
  o.text("exclusions.csv", render([&](std::ostream& os) { write_exclusions_csv(os, bf); }));
  o.finish();

  out << bf.kept_rows.size() << " of " << bf.source_rows << " rows kept; K = "
      << rep.selection.num_interior << ", lambda = " << format_double(rep.selection.lambda)
      << '\n';
  out << std::left << std::setw(12) << "covariate" << std::right << std::setw(12) << "PLSIVC"
      << std::setw(12) << "LM" << '\n'
      << std::fixed << std::setprecision(5);
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.covariate << std::right << std::setw(12) << r.plsivc
        << std::setw(12) << r.linear << '\n';
  }
  out << std::left << std::setw(12) << "R2" << std::right << std::setw(12) << rep.r2
      << std::setw(12) << rep.baseline.r2 << '\n';
  out.unsetf(std::ios::floatfield);
  return kExitOk;
}

void report_error(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Partially linear single-index varying-coefficient models", "plsivc"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI or TOML file with option values");
  app.set_version_flag("--version", std::string(library_version()));

  Global g;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for result files")->capture_default_str();
  app.add_option("--format", g.format, "Table output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Monte Carlo worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SimFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo campaign on the simulation design");
  simulate->add_option("--n", sim.n, "Sample size")->capture_default_str();
  simulate->add_option("--sigma", sim.sigma, "Error standard deviation")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "Replications")->capture_default_str();
  simulate->add_option("--methods", sim.methods, "Any of scad, lasso, oracle")
      ->delimiter(',')
      ->capture_default_str();
  simulate->add_option("--grid-points", sim.grid_points, "Reporting grid size")
      ->capture_default_str();
  simulate->add_option("--grid-lower", sim.grid_lower)->capture_default_str();
  simulate->add_option("--grid-upper", sim.grid_upper)->capture_default_str();
  simulate->add_flag("--validation", sim.validation, "Allow sigma = 0 and small n");
  add_tuning(simulate, sim.tuning, true);

  FitFlags fit;
  auto* fitcmd = app.add_subcommand("fit", "Fit one model to a CSV file");
  add_roles(fitcmd, fit.roles);
  fitcmd->add_option("--penalty", fit.penalty, "scad, lasso or none")
      ->check(CLI::IsMember({"scad", "lasso", "none"}, CLI::ignore_case))
      ->capture_default_str();
  fitcmd->add_option("--lambda", fit.lambda, "Base tuning parameter")->capture_default_str();
  fitcmd->add_option("--a", fit.a, "SCAD shape parameter")->capture_default_str();
  fitcmd->add_option("--num-interior", fit.num_interior,
                     "Interior knots (default floor(n^(1/5)))");
  fitcmd->add_option("--degree", fit.degree, "Spline degree")->capture_default_str();
  fitcmd->add_flag("--uniform", fit.uniform,
                   "Same lambda for every coefficient instead of adaptive weights");

  CvFlags cv;
  auto* cvcmd = app.add_subcommand("cv", "Cross-validated choice of K and lambda");
  add_roles(cvcmd, cv.roles);
  add_tuning(cvcmd, cv.tuning, true);

  BodyFatFlags bf;
  auto* bodyfat = app.add_subcommand("bodyfat", "Body-fat application");
  bodyfat->add_option("--input", bf.input, "Body-fat CSV")->required();
  bodyfat->add_option("--siri-tolerance", bf.rules.siri_tolerance,
                      "Largest allowed Siri discrepancy")
      ->capture_default_str();
  bodyfat->add_option("--min-bodyfat", bf.rules.min_bodyfat)->capture_default_str();
  bodyfat->add_option("--min-height", bf.rules.min_height)->capture_default_str();
  bodyfat->add_flag("--keep-all", bf.keep_all, "Skip the cleaning rules");
  bodyfat->add_flag("--raw", bf.raw, "Do not standardize the index covariates");
  add_tuning(bodyfat, bf.tuning, true);

  std::string campaign;
  auto* plot = app.add_subcommand("plot-data", "Curve and RASE CSVs from a saved campaign");
  plot->add_option("--campaign", campaign, "campaign.json written by simulate")->required();

  for (auto* sub : {simulate, fitcmd, cvcmd, bodyfat, plot}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(g, sim, out);
    if (fitcmd->parsed()) return cmd_fit(g, fit, out);
    if (cvcmd->parsed()) return cmd_cv(g, cv, out);
    if (bodyfat->parsed()) return cmd_bodyfat(g, bf, out);
    if (plot->parsed()) return cmd_plot_data(g, campaign, out);
  } catch (const ConfigError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    report_error(err, "data", e.what());
    return kExitData;
  } catch (const DomainError& e) {
    report_error(err, "data", e.what());
    return kExitData;
  } catch (const NumericalError& e) {
    report_error(err, "numerical", e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    report_error(err, "io", e.what());
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, "io", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    report_error(err, "numerical", e.what());
    return kExitNumerical;
  }
  report_error(err, "usage", "no subcommand given");
  return kExitUsage;
}

}  // namespace plsivc::cli
