#include "plsivc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <random>
#include <thread>

#include "plsivc/errors.hpp"
#include "plsivc/rng.hpp"

namespace plsivc {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::scad: return "SCAD";
    case Method::lasso: return "LASSO";
    case Method::oracle: return "Oracle";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "scad") return Method::scad;
  if (lower == "lasso") return Method::lasso;
  if (lower == "oracle") return Method::oracle;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

double Truth::g(Eigen::Index k, double u) const {
  switch (k) {
    case 0: return 2.0 * std::cos(std::numbers::pi * u);
    case 1: return 1.0 + 3.0 * u * u;
    default: return 0.0;
  }
}

Eigen::MatrixXd ar1_covariance(Eigen::Index dim, double scale, double rho) {
  Eigen::MatrixXd s(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    for (Eigen::Index l = 0; l < dim; ++l) {
      s(k, l) = scale * std::pow(rho, static_cast<double>(std::abs(k - l)));
    }
  }
  return s;
}

Truth default_truth() {
  constexpr Eigen::Index p = 10;
  constexpr Eigen::Index d = 10;
  constexpr Eigen::Index q = 10;
  Truth t;
  t.beta = Eigen::VectorXd::Zero(p);
  t.beta.head(3) << 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0;
  t.theta = Eigen::VectorXd::Zero(d);
  t.theta.head(3) << 2.0, 1.6, 0.8;
  t.sigma_u = ar1_covariance(d, 3.0, 0.5);
  t.sigma_z = ar1_covariance(q, 4.0, 0.5);
  t.support = Support::all(p, d, q);
  for (Eigen::Index l = 1; l < p; ++l) t.support.phi[l - 1] = t.beta(l) != 0.0;
  for (Eigen::Index h = 0; h < d; ++h) t.support.theta[h] = t.theta(h) != 0.0;
  for (Eigen::Index k = 0; k < q; ++k) t.support.gamma[k] = k < 2;
  return t;
}

void SimConfig::validate() const {
  if (!validation && n < 50) throw ConfigError("simulation needs n >= 50");
  if (n < 2) throw ConfigError("simulation needs n >= 2");
  if (reps < 1) throw ConfigError("replications must be at least 1");
  if (!(sigma >= 0.0) || (!validation && !(sigma > 0.0))) {
    throw ConfigError("sigma must be positive");
  }
  if (grid_points < 2 || !(grid_upper > grid_lower)) throw ConfigError("invalid reporting grid");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (methods.empty()) throw ConfigError("no methods requested");
  fit.validate();
  tuning.validate(n);
}

std::vector<double> SimConfig::grid() const {
  std::vector<double> g(static_cast<std::size_t>(grid_points));
  for (int j = 0; j < grid_points; ++j) {
    g[j] = grid_lower + (grid_upper - grid_lower) * j / (grid_points - 1);
  }
  return g;
}

Dataset gen_dataset(const SimConfig& cfg, const Truth& truth, int replication) {
  const Eigen::Index n = cfg.n;
  const Eigen::Index p = truth.p();
  const Eigen::Index d = truth.d();
  const Eigen::Index q = truth.q();
  std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(replication)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-0.75, 0.75);
  const Eigen::MatrixXd lz = truth.sigma_z.llt().matrixL();
  const Eigen::MatrixXd lu = truth.sigma_u.llt().matrixL();

  Dataset data;
  data.y.resize(n);
  data.x.resize(n, p);
  data.z.resize(n, q);
  data.u.resize(n, d);
  Eigen::VectorXd ez(q);
  Eigen::VectorXd eu(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) data.x(i, j) = uniform(rng);
    for (Eigen::Index k = 0; k < q; ++k) ez(k) = normal(rng);
    for (Eigen::Index h = 0; h < d; ++h) eu(h) = normal(rng);
    const double eps = normal(rng);
    data.z.row(i) = (lz * ez).transpose();
    data.u.row(i) = (lu * eu).transpose();
    const double index = data.x.row(i).dot(truth.beta);
    double y = data.u.row(i).dot(truth.theta) + cfg.sigma * eps;
    for (Eigen::Index k = 0; k < q; ++k) y += data.z(i, k) * truth.g(k, index);
    data.y(i) = y;
  }
  data.fill_default_names();
  return data;
}

double metric_inner_product(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta0) {
  return normalize_direction(beta_hat).dot(beta0);
}

double metric_gmse(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta0,
                   const Eigen::MatrixXd& sigma_u) {
  const Eigen::VectorXd e = theta_hat - theta0;
  return e.dot(sigma_u * e);
}

double metric_rase(const Eigen::VectorXd& g_hat, const Eigen::VectorXd& g_true) {
  return std::sqrt((g_hat - g_true).squaredNorm() / static_cast<double>(g_hat.size()));
}

Counts metric_counts(const std::vector<bool>& estimated_nonzero,
                     const std::vector<bool>& true_nonzero) {
  if (estimated_nonzero.size() != true_nonzero.size()) {
    throw std::invalid_argument("metric_counts: length mismatch");
  }
  Counts c;
  for (std::size_t j = 0; j < true_nonzero.size(); ++j) {
    if (!true_nonzero[j] && !estimated_nonzero[j]) ++c.correct;
    if (true_nonzero[j] && !estimated_nonzero[j]) ++c.incorrect;
  }
  return c;
}

namespace {

struct Reduction {
  std::vector<Eigen::Index> u_cols;
  std::vector<Eigen::Index> x_cols;
  std::vector<Eigen::Index> z_cols;

  bool usable() const { return x_cols.size() >= 2 && !z_cols.empty(); }
};

Reduction reduction_for(const Support& s) {
  Reduction r;
  for (std::size_t h = 0; h < s.theta.size(); ++h) {
    if (s.theta[h]) r.u_cols.push_back(static_cast<Eigen::Index>(h));
  }
  r.x_cols.push_back(0);
  for (std::size_t l = 0; l < s.phi.size(); ++l) {
    if (s.phi[l]) r.x_cols.push_back(static_cast<Eigen::Index>(l + 1));
  }
  for (std::size_t k = 0; k < s.gamma.size(); ++k) {
    if (s.gamma[k]) r.z_cols.push_back(static_cast<Eigen::Index>(k));
  }
  return r;
}

FitResult fill_back(const FitResult& sub, const Reduction& r, const Dataset& full) {
  FitResult out = sub;
  const Eigen::Index p = full.p();
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(p - 1);
  for (std::size_t j = 1; j < r.x_cols.size(); ++j) {
    phi(r.x_cols[j] - 1) = sub.phi.values()(static_cast<Eigen::Index>(j - 1));
  }
  out.phi = IndexParam(phi);
  out.coef.beta = beta_from_phi(out.phi);
  out.coef.theta = Eigen::VectorXd::Zero(full.d());
  for (std::size_t j = 0; j < r.u_cols.size(); ++j) {
    out.coef.theta(r.u_cols[j]) = sub.coef.theta(static_cast<Eigen::Index>(j));
  }
  out.coef.gamma = Eigen::MatrixXd::Zero(sub.coef.gamma.rows(), full.q());
  out.gamma_hnorm = Eigen::VectorXd::Zero(full.q());
  for (std::size_t j = 0; j < r.z_cols.size(); ++j) {
    out.coef.gamma.col(r.z_cols[j]) = sub.coef.gamma.col(static_cast<Eigen::Index>(j));
    out.gamma_hnorm(r.z_cols[j]) = sub.gamma_hnorm(static_cast<Eigen::Index>(j));
  }
  out.selected = Support::all(p, full.d(), full.q());
  for (Eigen::Index l = 0; l < p - 1; ++l) out.selected.phi[l] = phi(l) != 0.0;
  for (Eigen::Index h = 0; h < full.d(); ++h) out.selected.theta[h] = out.coef.theta(h) != 0.0;
  for (Eigen::Index k = 0; k < full.q(); ++k) out.selected.gamma[k] = out.gamma_hnorm(k) > 0.0;
  out.g_grid = evaluate_functions(out.knots, out.coef.gamma, out.grid);
  return out;
}

FitConfig without_support(FitConfig cfg) {
  cfg.fixed_support.reset();
  cfg.penalty = PenaltySpec{};
  return cfg;
}

}  // namespace

FitResult oracle_fit(const Dataset& data, const Support& support, const FitConfig& config,
                     const std::optional<IndexParam>& phi_init) {
  const Reduction r = reduction_for(support);
  if (!r.usable()) {
    FitConfig cfg = without_support(config);
    cfg.fixed_support = support;
    return fit_unpenalized(data, cfg, phi_init);
  }
  const Dataset sub = data.select_columns(r.u_cols, r.x_cols, r.z_cols);
  std::optional<IndexParam> sub_init;
  if (phi_init) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(r.x_cols.size() - 1));
    for (std::size_t j = 1; j < r.x_cols.size(); ++j) {
      v(static_cast<Eigen::Index>(j - 1)) = phi_init->values()(r.x_cols[j] - 1);
    }
    sub_init = IndexParam(v);
  }
  return fill_back(fit_unpenalized(sub, without_support(config), sub_init), r, data);
}

KnotSelection oracle_select(const Dataset& data, const Support& support,
                            const FitConfig& config, const TuningGrid& grid,
                            std::uint64_t seed) {
  const Reduction r = reduction_for(support);
  if (!r.usable()) {
    FitConfig cfg = without_support(config);
    cfg.fixed_support = support;
    CvCache cache(data, cfg, grid.folds, seed);
    return select_knots_unpenalized(cache, grid.knots);
  }
  const Dataset sub = data.select_columns(r.u_cols, r.x_cols, r.z_cols);
  CvCache cache(sub, without_support(config), grid.folds, seed);
  KnotSelection sel = select_knots_unpenalized(cache, grid.knots);
  sel.fit = fill_back(sel.fit, r, data);
  return sel;
}

namespace {

void score(ReplicationRecord& rec, const FitResult& fit, const Truth& truth,
           const std::vector<double>& grid) {
  rec.inner_product = metric_inner_product(fit.coef.beta, truth.beta);

  std::vector<bool> beta_est(static_cast<std::size_t>(truth.p()));
  std::vector<bool> beta_true(beta_est.size());
  for (Eigen::Index j = 0; j < truth.p(); ++j) {
    beta_est[j] = fit.coef.beta(j) != 0.0;
    beta_true[j] = truth.beta(j) != 0.0;
  }
  rec.beta = metric_counts(beta_est, beta_true);

  std::vector<bool> theta_est(static_cast<std::size_t>(truth.d()));
  for (Eigen::Index h = 0; h < truth.d(); ++h) theta_est[h] = fit.coef.theta(h) != 0.0;
  rec.theta = metric_counts(theta_est, truth.support.theta);

  std::vector<bool> g_est(static_cast<std::size_t>(truth.q()));
  for (Eigen::Index k = 0; k < truth.q(); ++k) g_est[k] = fit.gamma_hnorm(k) != 0.0;
  rec.g = metric_counts(g_est, truth.support.gamma);

  rec.gmse = metric_gmse(fit.coef.theta, truth.theta, truth.sigma_u);

  const Eigen::Index shown = std::min<Eigen::Index>(2, truth.q());
  rec.g_hat = evaluate_functions(fit.knots, fit.coef.gamma.leftCols(shown), grid,
                                 OutOfRange::extend);
  Eigen::VectorXd g_true(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index k = 0; k < shown; ++k) {
    for (std::size_t j = 0; j < grid.size(); ++j) g_true(j) = truth.g(k, grid[j]);
    (k == 0 ? rec.rase1 : rec.rase2) = metric_rase(rec.g_hat.col(k), g_true);
  }
}

constexpr std::uint64_t kCvStream = 0x5eed0f01d5ULL;

}  // namespace

std::vector<ReplicationRecord> run_replication(const SimConfig& cfg, const Truth& truth,
                                               int replication) {
  std::vector<ReplicationRecord> out;
  const std::vector<double> grid = cfg.grid();
  std::optional<Dataset> data;
  std::string data_error;
  try {
    data = gen_dataset(cfg, truth, replication);
  } catch (const std::exception& e) {
    data_error = e.what();
  }
  const std::uint64_t cv_seed =
      derive_seed(cfg.seed ^ kCvStream, static_cast<std::uint64_t>(replication));
  std::optional<CvCache> cache;

  for (Method m : cfg.methods) {
    ReplicationRecord rec;
    rec.replication = replication;
    rec.method = m;
    try {
      if (!data) throw DataError(data_error);
      if (m == Method::oracle) {
        const KnotSelection ks = oracle_select(*data, truth.support, cfg.fit, cfg.tuning, cv_seed);
        rec.num_interior = ks.num_interior;
        score(rec, ks.fit, truth, grid);
      } else {
        if (!cache) cache.emplace(*data, cfg.fit, cfg.tuning.folds, cv_seed);
        const PenaltyFamily family =
            m == Method::scad ? PenaltyFamily::scad : PenaltyFamily::lasso;
        const Selection sel = select(*cache, cfg.tuning, family, cfg.fit.penalty.a);
        rec.num_interior = sel.num_interior;
        rec.lambda = sel.lambda;
        score(rec, sel.fit, truth, grid);
      }
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

const MethodSummary& SimSummary::at(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw ConfigError("method '" + std::string(to_string(m)) + "' was not simulated");
}

SimSummary summarize(const SimConfig& cfg, const Truth& truth,
                     std::vector<ReplicationRecord> records) {
  SimSummary out;
  out.grid = cfg.grid();
  const auto g_count = static_cast<Eigen::Index>(out.grid.size());
  const Eigen::Index shown = std::min<Eigen::Index>(2, truth.q());
  out.g_true.resize(g_count, shown);
  for (Eigen::Index k = 0; k < shown; ++k) {
    for (Eigen::Index j = 0; j < g_count; ++j) out.g_true(j, k) = truth.g(k, out.grid[j]);
  }

  for (Method m : cfg.methods) {
    MethodSummary s;
    s.method = m;
    s.g_mean = Eigen::MatrixXd::Zero(g_count, shown);
    std::vector<double> inner;
    for (const auto& r : records) {
      if (r.method != m) continue;
      if (!r.ok) {
        ++s.failures;
        continue;
      }
      inner.push_back(r.inner_product);
      s.c_beta += r.beta.correct;
      s.i_beta += r.beta.incorrect;
      s.c_theta += r.theta.correct;
      s.i_theta += r.theta.incorrect;
      s.c_g += r.g.correct;
      s.i_g += r.g.incorrect;
      s.gmse += r.gmse;
      s.rase1 += r.rase1;
      s.rase2 += r.rase2;
      s.g_mean += r.g_hat;
    }
    s.completed = static_cast<int>(inner.size());
    if (s.completed > 0) {
      const double c = s.completed;
      double sum = 0.0;
      for (double v : inner) sum += v;
      s.mean = sum / c;
      double ss = 0.0;
      for (double v : inner) ss += (v - s.mean) * (v - s.mean);
      s.sd = s.completed > 1 ? std::sqrt(ss / (c - 1.0)) : 0.0;
      s.c_beta /= c;
      s.i_beta /= c;
      s.c_theta /= c;
      s.i_theta /= c;
      s.c_g /= c;
      s.i_g /= c;
      s.gmse /= c;
      s.rase1 /= c;
      s.rase2 /= c;
      s.g_mean /= c;
    }
    s.bias = s.mean - 1.0;
    out.methods.push_back(std::move(s));
  }
  out.records = std::move(records);
  return out;
}

SimSummary run_monte_carlo(const SimConfig& cfg, const Truth& truth) {
  cfg.validate();
  std::vector<std::vector<ReplicationRecord>> slots(static_cast<std::size_t>(cfg.reps));
  const auto one = [&](int r) {
    try {
      slots[r] = run_replication(cfg, truth, r);
    } catch (const std::exception& e) {
      for (Method m : cfg.methods) {
        ReplicationRecord rec;
        rec.replication = r;
        rec.method = m;
        rec.error = e.what();
        slots[r].push_back(std::move(rec));
      }
    }
  };

  const int workers = std::min(cfg.threads, cfg.reps);
  if (workers <= 1) {
    for (int r = 0; r < cfg.reps; ++r) one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < cfg.reps; r = next.fetch_add(1)) one(r);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<ReplicationRecord> records;
  for (auto& slot : slots) {
    for (auto& rec : slot) records.push_back(std::move(rec));
  }
  return summarize(cfg, truth, std::move(records));
}

}  // namespace plsivc
