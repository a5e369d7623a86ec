#include "plsivc_cli/report.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "plsivc/csv.hpp"
#include "plsivc/errors.hpp"
#include "plsivc/manifest.hpp"

namespace plsivc::cli {

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// One array per column.
json columns(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index k = 0; k < m.cols(); ++k) out.push_back(vec(m.col(k)));
  return out;
}

Eigen::MatrixXd from_columns(const json& j) {
  if (j.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto col = to_vec(j[k]);
    if (col.size() != rows) throw DataError("ragged matrix in campaign file");
    m.col(static_cast<Eigen::Index>(k)) = col;
  }
  return m;
}

json counts(const Counts& c) { return {{"C", c.correct}, {"I", c.incorrect}}; }
Counts counts_from(const json& j) { return {j.at("C").get<int>(), j.at("I").get<int>()}; }

std::string csv_field(const std::string& s) {
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

json to_json(const Manifest& m) {
  json j{{"tool", "plsivc"},
         {"version", std::string(library_version())},
         {"command", m.command},
         {"seed", m.seed},
         {"config", m.config}};
  j["input_sha256"] = m.input_digest ? json(*m.input_digest) : json(nullptr);
  return j;
}

json to_json(const FitConfig& c) {
  json pen{{"family", std::string(to_string(c.penalty.family))},
           {"a", c.penalty.a},
           {"lambda", c.penalty.lambda}};
  if (c.penalty.lambda_phi.size()) pen["lambda_phi"] = vec(c.penalty.lambda_phi);
  if (c.penalty.lambda_theta.size()) pen["lambda_theta"] = vec(c.penalty.lambda_theta);
  if (c.penalty.lambda_gamma.size()) pen["lambda_gamma"] = vec(c.penalty.lambda_gamma);
  json j{{"zero_threshold", c.zero_threshold},
         {"max_iterations", c.max_iterations},
         {"tolerance", c.tolerance},
         {"ridge", c.ridge},
         {"penalty", pen},
         {"degree", c.degree},
         {"num_interior", c.num_interior},
         {"max_phi_newton", c.max_phi_newton},
         {"init_candidates", c.init_candidates},
         {"init_refine", c.init_refine},
         {"init_seed", c.init_seed}};
  if (c.fixed_support) {
    j["fixed_support"] = {{"phi", c.fixed_support->phi},
                          {"theta", c.fixed_support->theta},
                          {"gamma", c.fixed_support->gamma}};
  }
  return j;
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.zero_threshold = j.value("zero_threshold", c.zero_threshold);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.ridge = j.value("ridge", c.ridge);
  c.degree = j.value("degree", c.degree);
  c.num_interior = j.value("num_interior", c.num_interior);
  c.max_phi_newton = j.value("max_phi_newton", c.max_phi_newton);
  c.init_candidates = j.value("init_candidates", c.init_candidates);
  c.init_refine = j.value("init_refine", c.init_refine);
  c.init_seed = j.value("init_seed", c.init_seed);
  if (j.contains("penalty")) {
    const auto& p = j["penalty"];
    c.penalty.family = parse_penalty_family(p.value("family", std::string("SCAD")));
    c.penalty.a = p.value("a", c.penalty.a);
    c.penalty.lambda = p.value("lambda", 0.0);
    if (p.contains("lambda_phi")) c.penalty.lambda_phi = to_vec(p["lambda_phi"]);
    if (p.contains("lambda_theta")) c.penalty.lambda_theta = to_vec(p["lambda_theta"]);
    if (p.contains("lambda_gamma")) c.penalty.lambda_gamma = to_vec(p["lambda_gamma"]);
  }
  if (j.contains("fixed_support")) {
    const auto& s = j["fixed_support"];
    c.fixed_support = Support{s.at("phi").get<std::vector<bool>>(),
                              s.at("theta").get<std::vector<bool>>(),
                              s.at("gamma").get<std::vector<bool>>()};
  }
  return c;
}

json to_json(const TuningGrid& g) {
  return {{"lambdas", g.lambdas}, {"knots", g.knots}, {"folds", g.folds}};
}

TuningGrid tuning_grid_from_json(const json& j) {
  TuningGrid g;
  g.lambdas = j.value("lambdas", std::vector<double>{});
  g.knots = j.value("knots", std::vector<int>{});
  g.folds = j.value("folds", g.folds);
  return g;
}

json to_json(const SimConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
  return {{"n", c.n},
          {"sigma", c.sigma},
          {"reps", c.reps},
          {"seed", c.seed},
          {"methods", methods},
          {"grid_points", c.grid_points},
          {"grid_lower", c.grid_lower},
          {"grid_upper", c.grid_upper},
          {"validation", c.validation},
          {"tuning", to_json(c.tuning)},
          {"fit", to_json(c.fit)}};
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  c.n = j.at("n").get<Eigen::Index>();
  c.sigma = j.at("sigma").get<double>();
  c.reps = j.at("reps").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.methods.clear();
  for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
  c.grid_points = j.value("grid_points", c.grid_points);
  c.grid_lower = j.value("grid_lower", c.grid_lower);
  c.grid_upper = j.value("grid_upper", c.grid_upper);
  c.validation = j.value("validation", c.validation);
  if (j.contains("tuning")) c.tuning = tuning_grid_from_json(j["tuning"]);
  if (j.contains("fit")) c.fit = fit_config_from_json(j["fit"]);
  return c;
}

json to_json(const FitResult& fit, const Dataset& names) {
  Dataset named = names;
  named.fill_default_names();
  const std::vector<bool> beta_sel = fit.selected.beta();
  std::vector<std::string> chosen;
  for (std::size_t l = 0; l < beta_sel.size(); ++l) {
    if (beta_sel[l]) chosen.push_back(named.x_names[l]);
  }
  for (std::size_t h = 0; h < fit.selected.theta.size(); ++h) {
    if (fit.selected.theta[h]) chosen.push_back(named.u_names[h]);
  }
  for (std::size_t k = 0; k < fit.selected.gamma.size(); ++k) {
    if (fit.selected.gamma[k]) chosen.push_back("g[" + named.z_names[k] + "]");
  }
  const auto knots = fit.knots.knots();
  return {{"beta", vec(fit.coef.beta)},
          {"theta", vec(fit.coef.theta)},
          {"gamma", columns(fit.coef.gamma)},
          {"selected",
           {{"beta", beta_sel},
            {"theta", fit.selected.theta},
            {"gamma", fit.selected.gamma},
            {"names", chosen}}},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"rss", fit.rss},
          {"objective", fit.objective},
          {"names", {{"x", named.x_names}, {"u", named.u_names}, {"z", named.z_names}}},
          {"gamma_hnorm", vec(fit.gamma_hnorm)},
          {"degree", fit.knots.degree()},
          {"num_interior", fit.knots.num_interior()},
          {"knots", std::vector<double>(knots.begin(), knots.end())},
          {"out_of_range", fit.out_of_range}};
}

json to_json(const std::vector<CvPoint>& table) {
  json out = json::array();
  for (const auto& p : table) {
    json row{{"K", p.num_interior}, {"lambda", p.lambda}, {"ok", p.ok}};
    row["score"] = p.ok ? json(p.score) : json(nullptr);
    if (!p.ok) row["error"] = p.error;
    out.push_back(row);
  }
  return out;
}

json summary_json(const SimSummary& s) {
  json out = json::array();
  for (const auto& m : s.methods) {
    out.push_back({{"method", std::string(to_string(m.method))},
                   {"completed", m.completed},
                   {"failures", m.failures},
                   {"mean", m.mean},
                   {"bias", m.bias},
                   {"sd", m.sd},
                   {"C_beta", m.c_beta},
                   {"I_beta", m.i_beta},
                   {"GMSE", m.gmse},
                   {"C_theta", m.c_theta},
                   {"I_theta", m.i_theta},
                   {"C_g", m.c_g},
                   {"I_g", m.i_g},
                   {"RASE1", m.rase1},
                   {"RASE2", m.rase2}});
  }
  return out;
}

json campaign_json(const SimSummary& s) {
  json recs = json::array();
  for (const auto& r : s.records) {
    recs.push_back({{"replication", r.replication},
                    {"method", std::string(to_string(r.method))},
                    {"ok", r.ok},
                    {"error", r.error},
                    {"K", r.num_interior},
                    {"lambda", r.lambda},
                    {"inner_product", r.inner_product},
                    {"beta", counts(r.beta)},
                    {"theta", counts(r.theta)},
                    {"g", counts(r.g)},
                    {"gmse", r.gmse},
                    {"rase1", r.rase1},
                    {"rase2", r.rase2},
                    {"g_hat", columns(r.g_hat)}});
  }
  return {{"grid", s.grid}, {"g_true", columns(s.g_true)}, {"records", recs}};
}

std::vector<ReplicationRecord> records_from_json(const json& j) {
  std::vector<ReplicationRecord> out;
  for (const auto& r : j.at("records")) {
    ReplicationRecord rec;
    rec.replication = r.at("replication").get<int>();
    rec.method = parse_method(r.at("method").get<std::string>());
    rec.ok = r.at("ok").get<bool>();
    rec.error = r.value("error", std::string{});
    rec.num_interior = r.at("K").get<int>();
    rec.lambda = r.at("lambda").get<double>();
    rec.inner_product = r.at("inner_product").get<double>();
    rec.beta = counts_from(r.at("beta"));
    rec.theta = counts_from(r.at("theta"));
    rec.g = counts_from(r.at("g"));
    rec.gmse = r.at("gmse").get<double>();
    rec.rase1 = r.at("rase1").get<double>();
    rec.rase2 = r.at("rase2").get<double>();
    rec.g_hat = from_columns(r.at("g_hat"));
    out.push_back(std::move(rec));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const SimSummary& s, const SimConfig& cfg) {
  out << "method,n,sigma,completed,failures,mean,bias,sd,C_beta,I_beta,GMSE,C_theta,I_theta,"
         "C_g,I_g,RASE1,RASE2\n";
  for (const auto& m : s.methods) {
    out << to_string(m.method) << ',' << cfg.n << ',' << format_double(cfg.sigma) << ','
        << m.completed << ',' << m.failures;
    for (double v : {m.mean, m.bias, m.sd, m.c_beta, m.i_beta, m.gmse, m.c_theta, m.i_theta,
                     m.c_g, m.i_g, m.rase1, m.rase2}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

void write_rase_csv(std::ostream& out, const SimSummary& s) {
  out << "replication,method,ok,rase1,rase2,rase\n";
  for (const auto& r : s.records) {
    out << r.replication << ',' << to_string(r.method) << ',' << (r.ok ? 1 : 0);
    if (r.ok) {
      out << ',' << format_double(r.rase1) << ',' << format_double(r.rase2) << ','
          << format_double(r.rase1 + r.rase2) << '\n';
    } else {
      out << ",,,\n";
    }
  }
}

void write_curve_csv(std::ostream& out, const SimSummary& s, Method m) {
  const MethodSummary& ms = s.at(m);
  out << "u,g1_true,g1_hat_mean,g2_true,g2_hat_mean\n";
  for (std::size_t j = 0; j < s.grid.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    out << format_double(s.grid[j]);
    for (Eigen::Index k = 0; k < 2; ++k) {
      out << ',' << format_double(s.g_true(i, k)) << ',' << format_double(ms.g_mean(i, k));
    }
    out << '\n';
  }
}

void write_cv_csv(std::ostream& out, const std::vector<CvPoint>& table) {
  out << "K,lambda,score,ok,error\n";
  for (const auto& p : table) {
    out << p.num_interior << ',' << format_double(p.lambda) << ','
        << (p.ok ? format_double(p.score) : std::string()) << ',' << (p.ok ? 1 : 0) << ','
        << (p.ok ? std::string() : csv_field(p.error)) << '\n';
  }
}

std::vector<CoefficientRow> bodyfat_table(const BodyFatData& bf, const BodyFatReport& rep) {
  const Dataset& d = bf.data;
  const auto& coef = rep.selection.fit.coef;
  const auto& lm = rep.baseline;
  // Baseline order: intercept, U, height, X.
  std::vector<CoefficientRow> rows;
  for (Eigen::Index h = 0; h < d.d(); ++h) {
    rows.push_back({d.u_names[static_cast<std::size_t>(h)], coef.theta(h), lm.coef(1 + h)});
  }
  for (Eigen::Index l = 0; l < d.p(); ++l) {
    rows.push_back(
        {d.x_names[static_cast<std::size_t>(l)], rep.table_beta(l), lm.coef(2 + d.d() + l)});
  }
  return rows;
}

json bodyfat_json(const BodyFatData& bf, const BodyFatReport& rep) {
  json table = json::array();
  for (const auto& r : bodyfat_table(bf, rep)) {
    table.push_back({{"covariate", r.covariate}, {"plsivc", r.plsivc}, {"lm", r.linear}});
  }
  json excluded = json::array();
  for (const auto& e : bf.excluded) excluded.push_back({{"row", e.row}, {"reason", e.reason}});
  json lm = json::object();
  for (std::size_t i = 0; i < rep.baseline.names.size(); ++i) {
    lm[rep.baseline.names[i]] = rep.baseline.coef(static_cast<Eigen::Index>(i));
  }
  return {{"source_rows", bf.source_rows},
          {"kept_rows", bf.kept_rows.size()},
          {"excluded", excluded},
          {"standardized", bf.standardized},
          {"x_mean", vec(bf.x_mean)},
          {"x_scale", vec(bf.x_scale)},
          {"K", rep.selection.num_interior},
          {"lambda", rep.selection.lambda},
          {"sigma_hat", rep.selection.sigma_hat},
          {"table", table},
          {"index_flipped", rep.index_flipped},
          {"r2", {{"plsivc", rep.r2}, {"lm", rep.baseline.r2}}},
          {"lm_coefficients", lm},
          {"fit", to_json(rep.selection.fit, bf.data)},
          {"cv", to_json(rep.selection.table)}};
}

void write_bodyfat_csv(std::ostream& out, const std::vector<CoefficientRow>& rows,
                       const BodyFatReport& rep) {
  out << "covariate,plsivc,lm\n";
  for (const auto& r : rows) {
    out << r.covariate << ',' << format_double(r.plsivc) << ',' << format_double(r.linear)
        << '\n';
  }
  out << "R2," << format_double(rep.r2) << ',' << format_double(rep.baseline.r2) << '\n';
}

void write_exclusions_csv(std::ostream& out, const BodyFatData& bf) {
  out << "row,reason\n";
  for (const auto& e : bf.excluded) out << e.row << ',' << csv_field(e.reason) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace plsivc::cli
