#include "plsivc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>

#include "plsivc/errors.hpp"

namespace plsivc {

Support Support::all(Eigen::Index p, Eigen::Index d, Eigen::Index q) {
  return Support{std::vector<bool>(static_cast<std::size_t>(p - 1), true),
                 std::vector<bool>(static_cast<std::size_t>(d), true),
                 std::vector<bool>(static_cast<std::size_t>(q), true)};
}

std::vector<bool> Support::beta() const {
  std::vector<bool> b{true};
  b.insert(b.end(), phi.begin(), phi.end());
  return b;
}

void FitConfig::validate() const {
  if (!(zero_threshold > 0.0)) throw ConfigError("zero threshold must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("convergence tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("max iterations must be at least 1");
  if (!(ridge >= 0.0)) throw ConfigError("ridge jitter must be non-negative");
  if (degree < 0 || degree > kMaxSplineDegree) throw ConfigError("unsupported spline degree");
  if (num_interior < 0) throw ConfigError("number of interior knots must be >= 0");
  if (max_phi_newton < 1) throw ConfigError("max_phi_newton must be at least 1");
  if (init_candidates < 0 || init_refine < 1) throw ConfigError("invalid multi-start settings");
  penalty.validate();
}

Eigen::VectorXd FitResult::predict(const Dataset& data) const {
  return plsivc::predict(data, knots, coef);
}

namespace {

constexpr double kBallMargin = 1e-6;
constexpr int kMaxHalvings = 30;
constexpr double kNearSingular = 1e-13;
constexpr int kReportGridSize = 20;

// Column layout of the active part of alpha: active theta entries first,
// then one block of L columns per active coefficient function.
struct Layout {
  std::vector<Eigen::Index> theta;
  std::vector<Eigen::Index> gamma;
  Eigen::Index nb = 0;

  Eigen::Index gamma_offset() const { return static_cast<Eigen::Index>(theta.size()); }
  Eigen::Index cols() const {
    return gamma_offset() + nb * static_cast<Eigen::Index>(gamma.size());
  }
};

Layout make_layout(const Support& active, Eigen::Index nb) {
  Layout lay;
  lay.nb = nb;
  for (std::size_t h = 0; h < active.theta.size(); ++h) {
    if (active.theta[h]) lay.theta.push_back(static_cast<Eigen::Index>(h));
  }
  for (std::size_t k = 0; k < active.gamma.size(); ++k) {
    if (active.gamma[k]) lay.gamma.push_back(static_cast<Eigen::Index>(k));
  }
  return lay;
}

Eigen::MatrixXd build_design(const Dataset& data, const KnotVector& kv,
                             const Eigen::VectorXd& index, const Layout& lay,
                             EvalDiagnostics* diag = nullptr) {
  const Eigen::Index n = data.n();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, lay.cols());
  for (std::size_t j = 0; j < lay.theta.size(); ++j) {
    w.col(static_cast<Eigen::Index>(j)) = data.u.col(lay.theta[j]);
  }
  if (lay.gamma.empty()) return w;
  const int deg = kv.degree();
  for (Eigen::Index i = 0; i < n; ++i) {
    const LocalBasis lb = eval_local(kv, index(i), false, OutOfRange::clamp, diag);
    for (std::size_t g = 0; g < lay.gamma.size(); ++g) {
      const double zik = data.z(i, lay.gamma[g]);
      const Eigen::Index base =
          lay.gamma_offset() + static_cast<Eigen::Index>(g) * lay.nb + lb.first;
      for (int r = 0; r <= deg; ++r) w(i, base + r) = zik * lb.value[r];
    }
  }
  return w;
}

Support full_support(const Dataset& data) {
  return Support::all(data.p(), data.d(), data.q());
}

void check_support_shape(const Support& s, const Dataset& data) {
  if (static_cast<Eigen::Index>(s.phi.size()) != data.p() - 1 ||
      static_cast<Eigen::Index>(s.theta.size()) != data.d() ||
      static_cast<Eigen::Index>(s.gamma.size()) != data.q()) {
    throw ConfigError("support mask does not match the dataset dimensions");
  }
}

// Least squares in alpha needs more rows than linear coefficients. The phi
// step copes with a rank-deficient Gauss-Newton matrix on its own.
void check_sample_size(const Dataset& data, const FitConfig& cfg, const Support& active) {
  const auto count = [](const std::vector<bool>& v) {
    return static_cast<Eigen::Index>(std::count(v.begin(), v.end(), true));
  };
  const Eigen::Index nb = cfg.num_interior + cfg.degree + 1;
  const Eigen::Index params = count(active.theta) + nb * count(active.gamma);
  if (data.n() <= params) {
    throw DataError("insufficient observations: n = " + std::to_string(data.n()) +
                    " but the linear part has " + std::to_string(params) + " coefficients");
  }
}

Eigen::VectorXd masked_phi(const Eigen::VectorXd& phi, const std::vector<bool>& mask) {
  Eigen::VectorXd out = phi;
  for (Eigen::Index l = 0; l < out.size(); ++l) {
    if (!mask[static_cast<std::size_t>(l)]) out(l) = 0.0;
  }
  return out;
}

double alpha_penalty(const LqaWeights& w, const Eigen::VectorXd& theta,
                     const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& gram) {
  double s = 0.0;
  for (Eigen::Index h = 0; h < theta.size(); ++h) s += w.theta(h) * theta(h) * theta(h);
  for (Eigen::Index k = 0; k < gamma.cols(); ++k) {
    if (w.gamma(k) != 0.0) s += w.gamma(k) * gamma.col(k).dot(gram * gamma.col(k));
  }
  return s;
}

LqaWeights zero_weights(const Dataset& data) {
  return LqaWeights{Eigen::VectorXd::Zero(data.p() - 1), Eigen::VectorXd::Zero(data.d()),
                    Eigen::VectorXd::Zero(data.q())};
}

// Residuals of the index part and, optionally, the slopes
// s_i = sum_k z_ik dB(u_i)^T gamma_k at the index values X beta(phi).
struct IndexFit {
  Eigen::VectorXd resid;
  Eigen::VectorXd slope;
};

IndexFit index_fit(const Dataset& data, const KnotVector& kv,
                   const Eigen::VectorXd& partial, const Eigen::MatrixXd& gamma,
                   const std::vector<Eigen::Index>& live, const Eigen::VectorXd& beta,
                   bool with_slope) {
  const Eigen::Index n = data.n();
  const Eigen::VectorXd index = data.x * beta;
  const int deg = kv.degree();
  IndexFit out;
  out.resid = partial;
  if (with_slope) out.slope = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const LocalBasis lb = eval_local(kv, index(i), with_slope);
    double f = 0.0;
    double s = 0.0;
    for (Eigen::Index k : live) {
      double g = 0.0;
      double dg = 0.0;
      for (int r = 0; r <= deg; ++r) {
        const double c = gamma(lb.first + r, k);
        g += lb.value[r] * c;
        dg += lb.deriv[r] * c;
      }
      f += data.z(i, k) * g;
      s += data.z(i, k) * dg;
    }
    out.resid(i) -= f;
    if (with_slope) out.slope(i) = s;
  }
  return out;
}

std::vector<Eigen::Index> live_functions(const Eigen::MatrixXd& gamma) {
  std::vector<Eigen::Index> live;
  for (Eigen::Index k = 0; k < gamma.cols(); ++k) {
    if (!gamma.col(k).isZero(0.0)) live.push_back(k);
  }
  return live;
}

double phi_penalty(const Eigen::VectorXd& phi, const Eigen::VectorXd& w) {
  return (w.array() * phi.array().square()).sum();
}

double max_abs_change(const Estimates& a, const Estimates& b) {
  double c = (a.phi.values() - b.phi.values()).lpNorm<Eigen::Infinity>();
  if (a.theta.size() > 0) c = std::max(c, (a.theta - b.theta).lpNorm<Eigen::Infinity>());
  if (a.gamma.size() > 0 && a.gamma.rows() == b.gamma.rows() &&
      a.gamma.cols() == b.gamma.cols()) {
    c = std::max(c, (a.gamma - b.gamma).lpNorm<Eigen::Infinity>());
  } else if (a.gamma.size() > 0) {
    c = std::numeric_limits<double>::infinity();
  }
  return c;
}

std::vector<double> report_grid(const KnotVector& kv) {
  std::vector<double> grid(kReportGridSize);
  for (int j = 0; j < kReportGridSize; ++j) {
    grid[j] = kv.lower() + (kv.upper() - kv.lower()) * j / (kReportGridSize - 1);
  }
  return grid;
}

KnotVector knots_for(const Eigen::VectorXd& index, const FitConfig& cfg) {
  return make_knots(std::span<const double>(index.data(), static_cast<std::size_t>(index.size())),
                    cfg.num_interior, cfg.degree);
}

// Active-set solve of the alpha step. Keeps the design and the factor so the
// profiled phi step can project onto the design's column space.
struct AlphaSolve {
  Layout lay;
  Eigen::MatrixXd w;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt;
  Eigen::VectorXd sol;
  bool jittered = false;
};

AlphaSolve solve_alpha(const Dataset& data, const KnotVector& kv, const Eigen::VectorXd& index,
                       const Eigen::MatrixXd& gram, const LqaWeights& weights,
                       const Support& active, double ridge) {
  AlphaSolve out;
  out.lay = make_layout(active, kv.num_basis());
  const Layout& lay = out.lay;
  const Eigen::Index nb = lay.nb;
  const Eigen::Index m = lay.cols();
  out.w = build_design(data, kv, index, lay);
  if (m == 0) return out;

  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(m, m);
  normal.selfadjointView<Eigen::Lower>().rankUpdate(out.w.transpose());
  const Eigen::VectorXd rhs = out.w.transpose() * data.y;

  const double half_n = 0.5 * static_cast<double>(data.n());
  for (std::size_t j = 0; j < lay.theta.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    normal(c, c) += half_n * weights.theta(lay.theta[j]);
  }
  for (std::size_t g = 0; g < lay.gamma.size(); ++g) {
    const double wk = weights.gamma(lay.gamma[g]);
    if (wk == 0.0) continue;
    const Eigen::Index off = lay.gamma_offset() + static_cast<Eigen::Index>(g) * nb;
    normal.block(off, off, nb, nb).triangularView<Eigen::Lower>() += half_n * wk * gram;
  }

  out.llt.compute(normal);
  if (out.llt.info() != Eigen::Success || !(out.llt.rcond() > kNearSingular)) {
    const double mean_diag = normal.diagonal().mean();
    normal.diagonal().array() += ridge * (mean_diag > 0.0 ? mean_diag : 1.0);
    out.llt.compute(normal);
    out.jittered = true;
    if (out.llt.info() != Eigen::Success) throw NumericalError("singular design");
  }
  out.sol = out.llt.solve(rhs);
  if (!out.sol.allFinite()) throw NumericalError("singular design");
  return out;
}

void scatter_alpha(const AlphaSolve& a, Eigen::VectorXd& theta, Eigen::MatrixXd& gamma) {
  const Layout& lay = a.lay;
  for (std::size_t j = 0; j < lay.theta.size(); ++j) {
    theta(lay.theta[j]) = a.sol(static_cast<Eigen::Index>(j));
  }
  for (std::size_t g = 0; g < lay.gamma.size(); ++g) {
    gamma.col(lay.gamma[g]) =
        a.sol.segment(lay.gamma_offset() + static_cast<Eigen::Index>(g) * lay.nb, lay.nb);
  }
}

double penalty_total(const PenaltySpec& spec, const Estimates& est) {
  double s = 0.0;
  const Eigen::VectorXd& phi = est.phi.values();
  for (Eigen::Index l = 0; l < phi.size(); ++l) {
    s += penalty_value(spec.family, spec.a, spec.for_phi(l), std::abs(phi(l)));
  }
  for (Eigen::Index h = 0; h < est.theta.size(); ++h) {
    s += penalty_value(spec.family, spec.a, spec.for_theta(h), std::abs(est.theta(h)));
  }
  for (Eigen::Index k = 0; k < est.gamma_hnorm.size(); ++k) {
    s += penalty_value(spec.family, spec.a, spec.for_gamma(k), est.gamma_hnorm(k));
  }
  return s;
}

// Fills the estimates, fit statistics and reporting grid of `res`, whose
// knots and Gram matrix must match `cur`.
void finish(const Dataset& data, const FitConfig& cfg, const Estimates& cur, bool penalized,
            FitResult& res) {
  const double n = static_cast<double>(data.n());
  res.phi = cur.phi;
  res.coef.beta = beta_from_phi(cur.phi);
  res.coef.theta = cur.theta;
  res.coef.gamma = cur.gamma;
  res.gamma_hnorm = cur.gamma_hnorm;

  EvalDiagnostics diag;
  const Eigen::VectorXd fitted = predict(data, res.knots, res.coef, &diag);
  res.out_of_range = diag.out_of_range;
  res.rss = (data.y - fitted).squaredNorm();
  res.objective = res.rss + (penalized && !cfg.fixed_support
                                 ? n * penalty_total(cfg.penalty, cur)
                                 : 0.0);

  res.selected = cur.active;
  const Eigen::VectorXd& phi = cur.phi.values();
  for (Eigen::Index l = 0; l < phi.size(); ++l) {
    res.selected.phi[l] = cur.active.phi[l] && phi(l) != 0.0;
  }
  for (Eigen::Index h = 0; h < cur.theta.size(); ++h) {
    res.selected.theta[h] = cur.active.theta[h] && cur.theta(h) != 0.0;
  }
  for (Eigen::Index k = 0; k < cur.gamma_hnorm.size(); ++k) {
    res.selected.gamma[k] = cur.active.gamma[k] && cur.gamma_hnorm(k) > 0.0;
  }
  res.grid = report_grid(res.knots);
  res.g_grid = evaluate_functions(res.knots, res.coef.gamma, res.grid);
}


// The alternating algorithm shared by the unpenalized and penalized fits.
FitResult iterate(const Dataset& data, const FitConfig& cfg, Estimates cur,
                  bool penalized) {
  const bool thresholding = penalized && !cfg.fixed_support.has_value();
  const double n = static_cast<double>(data.n());
  FitResult res;
  bool converged = false;
  int it = 0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    const Eigen::VectorXd beta = beta_from_phi(cur.phi);
    const Eigen::VectorXd index = data.x * beta;
    KnotVector kv = knots_for(index, cfg);
    Eigen::MatrixXd gram = gram_matrix(kv);

    const LqaWeights weights =
        penalized && !cfg.fixed_support
            ? lqa_weights(cfg.penalty, masked_phi(cur.phi.values(), cur.active.phi),
                          cur.theta, cur.gamma_hnorm)
            : zero_weights(data);

    AlphaStep as = step_alpha(data, kv, cur.phi, gram, weights, cur.active, cfg.ridge);

    Estimates next;
    next.theta = std::move(as.theta);
    next.gamma = std::move(as.gamma);
    next.gamma_hnorm.resize(next.gamma.cols());
    for (Eigen::Index k = 0; k < next.gamma.cols(); ++k) {
      next.gamma_hnorm(k) = h_norm(next.gamma.col(k), gram);
    }
    next.active = cur.active;

    const PhiStep ps = step_phi(data, kv, next.theta, next.gamma, cur.phi, weights.phi,
                                cur.active.phi, cfg.max_phi_newton);
    next.phi = ps.phi;
    if (thresholding) apply_threshold(next, cfg.zero_threshold);

    const double alpha_pen =
        0.5 * n * alpha_penalty(weights, next.theta, next.gamma, gram);
    IterationRecord rec;
    rec.surrogate_after_alpha = ps.objective_before + alpha_pen;
    rec.surrogate_after_phi = ps.objective_after + alpha_pen;
    rec.max_change = max_abs_change(next, cur);
    rec.phi_stalled = ps.stalled;
    rec.jittered = as.jittered;
    res.trace.push_back(rec);

    cur = std::move(next);
    res.knots = std::move(kv);
    res.gram = std::move(gram);
    if (it > 1 && rec.max_change < cfg.tolerance) {
      converged = true;
      break;
    }
  }

  res.iterations = std::min(it, cfg.max_iterations);
  res.converged = converged;
  finish(data, cfg, cur, penalized, res);
  return res;
}

// Map an arbitrary direction into the representable half-space beta_1 > 0.
IndexParam candidate_phi(Eigen::VectorXd beta, const std::vector<bool>& mask) {
  for (Eigen::Index l = 1; l < beta.size(); ++l) {
    if (!mask[static_cast<std::size_t>(l - 1)]) beta(l) = 0.0;
  }
  double norm = beta.norm();
  if (!(norm > 0.0)) {
    beta.setZero();
    beta(0) = 1.0;
    norm = 1.0;
  }
  beta /= norm;
  if (beta(0) < 0.0) beta = -beta;
  constexpr double kMinLead = 1e-3;
  if (beta(0) < kMinLead) {
    beta(0) = kMinLead;
    beta.normalize();
  }
  return IndexParam(beta.tail(beta.size() - 1));
}

// Everything the profiled fit needs at one value of phi: knots from the
// index range, the least-squares alpha and the residuals.
struct Profile {
  IndexParam phi;
  KnotVector kv{0, 0.0, 1.0, {}};
  Eigen::MatrixXd gram;
  AlphaSolve alpha;
  Eigen::VectorXd theta;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd resid;
  double rss = 0.0;
};

Profile profile_at(const Dataset& data, const FitConfig& cfg, const IndexParam& phi,
                   const Support& active) {
  Profile pr;
  pr.phi = phi;
  const Eigen::VectorXd index = data.x * beta_from_phi(phi);
  pr.kv = knots_for(index, cfg);
  pr.gram = gram_matrix(pr.kv);
  pr.alpha = solve_alpha(data, pr.kv, index, pr.gram, zero_weights(data), active, cfg.ridge);
  pr.theta = Eigen::VectorXd::Zero(data.d());
  pr.gamma = Eigen::MatrixXd::Zero(pr.kv.num_basis(), data.q());
  if (pr.alpha.lay.cols() > 0) {
    scatter_alpha(pr.alpha, pr.theta, pr.gamma);
    pr.resid = data.y - pr.alpha.w * pr.alpha.sol;
  } else {
    pr.resid = data.y;
  }
  pr.rss = pr.resid.squaredNorm();
  return pr;
}

Estimates estimates_of(const Profile& pr, const Support& active) {
  Estimates e;
  e.phi = pr.phi;
  e.theta = pr.theta;
  e.gamma = pr.gamma;
  e.gamma_hnorm.resize(pr.gamma.cols());
  for (Eigen::Index k = 0; k < pr.gamma.cols(); ++k) {
    e.gamma_hnorm(k) = h_norm(pr.gamma.col(k), pr.gram);
  }
  e.active = active;
  return e;
}

// Unpenalized fit. Each round solves alpha exactly for the current phi and
// then takes a damped Gauss-Newton step in phi whose Jacobian is projected
// off the column space of the alpha design (variable projection). Trial
// points are judged by the profiled residual sum of squares, so alpha is
// re-solved and knots rebuilt at every trial. Plain alternation with alpha
// held fixed during the phi step zig-zags badly on this problem.
FitResult profiled(const Dataset& data, const FitConfig& cfg, const IndexParam& start,
                   const Support& active) {
  std::vector<Eigen::Index> free;
  for (std::size_t l = 0; l < active.phi.size(); ++l) {
    if (active.phi[l]) free.push_back(static_cast<Eigen::Index>(l));
  }
  const auto m = static_cast<Eigen::Index>(free.size());

  Profile cur = profile_at(data, cfg, IndexParam(masked_phi(start.values(), active.phi)), active);
  FitResult res;
  bool converged = false;
  int it = 0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    IterationRecord rec;
    rec.surrogate_after_alpha = cur.rss;
    rec.jittered = cur.alpha.jittered;
    const Estimates before = estimates_of(cur, active);

    bool moved = false;
    const std::vector<Eigen::Index> live = live_functions(cur.gamma);
    if (m > 0 && !live.empty()) {
      const Eigen::VectorXd& phi = cur.phi.values();
      const IndexFit f = index_fit(data, cur.kv, data.y - data.u * cur.theta, cur.gamma, live,
                                   beta_from_phi(phi), true);
      const Eigen::MatrixXd xj = data.x * jacobian(phi);
      Eigen::MatrixXd dmat(data.n(), m);
      for (Eigen::Index a = 0; a < m; ++a) dmat.col(a) = xj.col(free[a]).cwiseProduct(f.slope);
      if (cur.alpha.lay.cols() > 0) {
        dmat -= cur.alpha.w * cur.alpha.llt.solve(cur.alpha.w.transpose() * dmat);
      }
      Eigen::MatrixXd hess = dmat.transpose() * dmat;
      const Eigen::VectorXd grad = dmat.transpose() * cur.resid;
      const double scale = std::max(hess.diagonal().maxCoeff(), 1e-300);
      hess.diagonal().array() += 1e-12 * scale;
      const Eigen::VectorXd delta = hess.ldlt().solve(grad);

      if (delta.allFinite()) {
        double t = 1.0;
        for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
          Eigen::VectorXd trial = phi;
          for (Eigen::Index a = 0; a < m; ++a) trial(free[a]) += t * delta(a);
          if (trial.norm() > 1.0 - kBallMargin) continue;
          Profile next;
          try {
            next = profile_at(data, cfg, IndexParam(trial), active);
          } catch (const DomainError&) {
            continue;
          }
          if (next.rss < cur.rss) {
            cur = std::move(next);
            moved = true;
            break;
          }
        }
      }
    }

    const Estimates after = estimates_of(cur, active);
    rec.surrogate_after_phi = cur.rss;
    rec.phi_stalled = !moved;
    rec.max_change = moved ? max_abs_change(after, before) : 0.0;
    res.trace.push_back(rec);
    // A failed line search along a Gauss-Newton direction means the
    // gradient vanishes to working precision.
    if (rec.max_change < cfg.tolerance) {
      converged = true;
      break;
    }
  }

  res.iterations = std::min(it, cfg.max_iterations);
  res.converged = converged;
  res.knots = cur.kv;
  res.gram = cur.gram;
  finish(data, cfg, estimates_of(cur, active), false, res);
  return res;
}

double candidate_rss(const Dataset& data, const FitConfig& cfg, const IndexParam& phi,
                     const Support& active) {
  try {
    return profile_at(data, cfg, phi, active).rss;
  } catch (const DomainError&) {
  } catch (const NumericalError&) {
  }
  return std::numeric_limits<double>::infinity();
}

// Cyclic search over the sphere: starting from the best coordinate axis (or
// `seed` when better), rotate beta toward each free coordinate axis over a
// fixed grid of angles and keep the best profiled fit. Cheap, deterministic,
// and it finds the right basin far more often than random restarts.
IndexParam sphere_search(const Dataset& data, const FitConfig& cfg, const Support& active,
                         const std::vector<IndexParam>& seeds) {
  const Eigen::Index p = data.p();
  const std::vector<bool> beta_mask = active.beta();
  std::optional<IndexParam> best;
  double best_rss = std::numeric_limits<double>::infinity();
  const auto consider = [&](const IndexParam& phi) {
    const double rss = candidate_rss(data, cfg, phi, active);
    if (rss < best_rss) {
      best_rss = rss;
      best = phi;
    }
  };
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!beta_mask[static_cast<std::size_t>(j)]) continue;
    consider(candidate_phi(Eigen::VectorXd::Unit(p, j), active.phi));
  }
  for (const auto& s : seeds) consider(s);
  if (!best) throw NumericalError("no usable starting direction");

  constexpr int kAngles = 6;
  constexpr int kSweeps = 2;
  for (int sweep = 0; sweep < kSweeps; ++sweep) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!beta_mask[static_cast<std::size_t>(j)]) continue;
      const Eigen::VectorXd beta = beta_from_phi(*best);
      Eigen::VectorXd ortho = Eigen::VectorXd::Unit(p, j) - beta(j) * beta;
      if (ortho.norm() < 1e-8) continue;
      ortho.normalize();
      for (int k = -kAngles; k <= kAngles; ++k) {
        if (k == 0) continue;
        const double t = std::numbers::pi * k / (2 * kAngles + 1);
        consider(candidate_phi(std::cos(t) * beta + std::sin(t) * ortho, active.phi));
      }
    }
  }
  return *best;
}

std::vector<IndexParam> initial_candidates(const Dataset& data, const FitConfig& cfg,
                                           const Support& active) {
  std::vector<IndexParam> out;
  const Eigen::Index p = data.p();

  // Slopes of the OLS fit of Y on (1, X).
  Eigen::MatrixXd design(data.n(), p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = data.x;
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(data.y);
  const Eigen::VectorXd slopes = coef.tail(p);
  if (slopes.allFinite() && slopes.norm() > 0.0) out.push_back(candidate_phi(slopes, active.phi));

  std::mt19937_64 rng(cfg.init_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < cfg.init_candidates; ++c) {
    Eigen::VectorXd dir(p);
    for (Eigen::Index j = 0; j < p; ++j) dir(j) = normal(rng);
    out.push_back(candidate_phi(dir, active.phi));
  }
  return out;
}

}  // namespace

AlphaStep step_alpha(const Dataset& data, const KnotVector& kv, const IndexParam& phi,
                     const Eigen::MatrixXd& gram, const LqaWeights& weights,
                     const Support& active, double ridge) {
  AlphaStep out;
  out.theta = Eigen::VectorXd::Zero(data.d());
  out.gamma = Eigen::MatrixXd::Zero(kv.num_basis(), data.q());
  const Eigen::VectorXd index = data.x * beta_from_phi(phi);
  const AlphaSolve a = solve_alpha(data, kv, index, gram, weights, active, ridge);
  if (a.lay.cols() == 0) return out;
  scatter_alpha(a, out.theta, out.gamma);
  out.jittered = a.jittered;
  return out;
}

double alpha_objective(const Dataset& data, const KnotVector& kv, const IndexParam& phi,
                       const Eigen::MatrixXd& gram, const LqaWeights& weights,
                       const Eigen::VectorXd& theta, const Eigen::MatrixXd& gamma) {
  const Coefficients coef{beta_from_phi(phi), theta, gamma};
  const double rss = (data.y - predict(data, kv, coef)).squaredNorm();
  return rss + 0.5 * static_cast<double>(data.n()) * alpha_penalty(weights, theta, gamma, gram);
}

Eigen::VectorXd alpha_gradient(const Dataset& data, const KnotVector& kv,
                               const IndexParam& phi, const Eigen::MatrixXd& gram,
                               const LqaWeights& weights, const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& gamma) {
  const Layout lay = make_layout(full_support(data), kv.num_basis());
  const Eigen::VectorXd index = data.x * beta_from_phi(phi);
  const Eigen::MatrixXd w = build_design(data, kv, index, lay);
  Eigen::VectorXd alpha(theta.size() + gamma.size());
  alpha << theta, gamma.reshaped();
  const Eigen::VectorXd resid = data.y - w * alpha;
  Eigen::VectorXd grad = -2.0 * w.transpose() * resid;
  const double n = static_cast<double>(data.n());
  const Eigen::Index d = theta.size();
  const Eigen::Index nb = kv.num_basis();
  grad.head(d).array() += n * weights.theta.array() * theta.array();
  for (Eigen::Index k = 0; k < gamma.cols(); ++k) {
    grad.segment(d + k * nb, nb) += n * weights.gamma(k) * (gram * gamma.col(k));
  }
  return grad;
}

double phi_objective(const Dataset& data, const KnotVector& kv, const Eigen::VectorXd& theta,
                     const Eigen::MatrixXd& gamma, const Eigen::VectorXd& phi,
                     const Eigen::VectorXd& phi_weights) {
  const Eigen::VectorXd partial = data.y - data.u * theta;
  const IndexFit f =
      index_fit(data, kv, partial, gamma, live_functions(gamma), beta_from_phi(phi), false);
  return f.resid.squaredNorm() +
         0.5 * static_cast<double>(data.n()) * phi_penalty(phi, phi_weights);
}

Eigen::VectorXd phi_gradient(const Dataset& data, const KnotVector& kv,
                             const Eigen::VectorXd& theta, const Eigen::MatrixXd& gamma,
                             const Eigen::VectorXd& phi, const Eigen::VectorXd& phi_weights) {
  const Eigen::VectorXd partial = data.y - data.u * theta;
  const IndexFit f =
      index_fit(data, kv, partial, gamma, live_functions(gamma), beta_from_phi(phi), true);
  const Eigen::MatrixXd jac = jacobian(phi);
  const Eigen::VectorXd sr = f.slope.cwiseProduct(f.resid);
  Eigen::VectorXd grad = -2.0 * jac.transpose() * (data.x.transpose() * sr);
  grad.array() += static_cast<double>(data.n()) * phi_weights.array() * phi.array();
  return grad;
}

PhiStep step_phi(const Dataset& data, const KnotVector& kv, const Eigen::VectorXd& theta,
                 const Eigen::MatrixXd& gamma, const IndexParam& phi0,
                 const Eigen::VectorXd& phi_weights, const std::vector<bool>& phi_active,
                 int max_newton) {
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd partial = data.y - data.u * theta;
  const std::vector<Eigen::Index> live = live_functions(gamma);

  std::vector<Eigen::Index> free;
  for (std::size_t l = 0; l < phi_active.size(); ++l) {
    if (phi_active[l]) free.push_back(static_cast<Eigen::Index>(l));
  }

  const auto objective = [&](const Eigen::VectorXd& phi) {
    const IndexFit f = index_fit(data, kv, partial, gamma, live, beta_from_phi(phi), false);
    return f.resid.squaredNorm() + 0.5 * n * phi_penalty(phi, phi_weights);
  };

  PhiStep out;
  Eigen::VectorXd phi = phi0.values();
  double q = objective(phi);
  out.objective_before = q;
  out.objective_after = q;
  out.phi = phi0;
  if (free.empty() || live.empty()) return out;

  const auto m = static_cast<Eigen::Index>(free.size());
  for (int step = 0; step < max_newton; ++step) {
    const IndexFit f = index_fit(data, kv, partial, gamma, live, beta_from_phi(phi), true);
    const Eigen::MatrixXd jac = jacobian(phi);
    // Rows G_i = s_i * J^T x_i of the residual Jacobian (up to sign).
    const Eigen::MatrixXd g_rows = (data.x * jac).array().colwise() * f.slope.array();

    Eigen::VectorXd grad(m);
    Eigen::MatrixXd hess(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index la = free[a];
      grad(a) = -2.0 * g_rows.col(la).dot(f.resid) + n * phi_weights(la) * phi(la);
      for (Eigen::Index b = 0; b <= a; ++b) {
        const double v = 2.0 * g_rows.col(la).dot(g_rows.col(free[b]));
        hess(a, b) = v;
        hess(b, a) = v;
      }
      hess(a, a) += n * phi_weights(la);
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd delta = ldlt.solve(-grad);
    if (ldlt.info() != Eigen::Success || !delta.allFinite() || !ldlt.isPositive()) {
      const double scale = std::max(hess.diagonal().cwiseAbs().maxCoeff(), 1e-12);
      hess.diagonal().array() += 1e-8 * scale;
      ldlt.compute(hess);
      delta = ldlt.solve(-grad);
      if (!delta.allFinite()) delta = -grad / scale;
    }

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial = phi;
    double q_trial = q;
    for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
      trial = phi;
      for (Eigen::Index a = 0; a < m; ++a) trial(free[a]) += t * delta(a);
      if (trial.norm() > 1.0 - kBallMargin) continue;
      q_trial = objective(trial);
      if (q_trial < q) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (step == 0) out.stalled = true;
      break;
    }
    const double decrease = q - q_trial;
    phi = trial;
    q = q_trial;
    ++out.newton_steps;
    if (decrease <= 1e-12 * q + 1e-300) break;
  }
  out.phi = IndexParam(phi);
  out.objective_after = q;
  return out;
}

void apply_threshold(Estimates& est, double eps) {
  Eigen::VectorXd phi = est.phi.values();
  for (Eigen::Index l = 0; l < phi.size(); ++l) {
    if (std::abs(phi(l)) < eps || !est.active.phi[l]) {
      phi(l) = 0.0;
      est.active.phi[l] = false;
    }
  }
  est.phi = IndexParam(phi);
  for (Eigen::Index h = 0; h < est.theta.size(); ++h) {
    if (std::abs(est.theta(h)) < eps || !est.active.theta[h]) {
      est.theta(h) = 0.0;
      est.active.theta[h] = false;
    }
  }
  for (Eigen::Index k = 0; k < est.gamma.cols(); ++k) {
    if (est.gamma_hnorm(k) < eps || !est.active.gamma[k]) {
      est.gamma.col(k).setZero();
      est.gamma_hnorm(k) = 0.0;
      est.active.gamma[k] = false;
    }
  }
}

FitResult fit_unpenalized(const Dataset& data, const FitConfig& config,
                          const std::optional<IndexParam>& phi_init) {
  config.validate();
  data.validate();
  const Support active = config.fixed_support.value_or(full_support(data));
  check_support_shape(active, data);
  check_sample_size(data, config, active);

  if (phi_init) {
    if (phi_init->size() != data.p() - 1) {
      throw ConfigError("initial index parameter has the wrong length");
    }
    return profiled(data, config, *phi_init, active);
  }

  // Global stage on a coarse basis (quadratic, no interior knots), where a
  // profiled descent is cheap and the objective is far less rugged: descend
  // from the sphere-search result and from every random candidate.
  FitConfig coarse = config;
  coarse.num_interior = 0;
  coarse.degree = std::min(config.degree, 2);
  coarse.max_iterations = std::min(config.max_iterations, 20);
  const std::vector<IndexParam> random = initial_candidates(data, config, active);
  std::vector<IndexParam> starts{sphere_search(data, coarse, active, {})};
  starts.insert(starts.end(), random.begin(), random.end());

  std::vector<std::pair<double, IndexParam>> coarse_fits;
  for (const auto& start : starts) {
    try {
      const FitResult f = profiled(data, coarse, start, active);
      coarse_fits.emplace_back(f.rss, f.phi);
    } catch (const DomainError&) {
    } catch (const NumericalError&) {
    }
  }
  std::stable_sort(coarse_fits.begin(), coarse_fits.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::optional<FitResult> best;
  const std::size_t refine = std::min<std::size_t>(config.init_refine, coarse_fits.size());
  for (std::size_t r = 0; r < refine; ++r) {
    FitResult fit = profiled(data, config, coarse_fits[r].second, active);
    if (!best || fit.rss < best->rss) best = std::move(fit);
  }
  if (!best) throw NumericalError("no usable starting direction");
  return std::move(*best);
}

FitResult fit_penalized(const Dataset& data, const FitConfig& config) {
  return fit_penalized(data, config, fit_unpenalized(data, config));
}

FitResult fit_penalized(const Dataset& data, const FitConfig& config,
                        const FitResult& unpenalized) {
  config.validate();
  data.validate();
  const Support active = config.fixed_support.value_or(full_support(data));
  check_support_shape(active, data);
  check_sample_size(data, config, active);
  const Eigen::Index nb = config.num_interior + config.degree + 1;
  if (unpenalized.coef.gamma.rows() != nb || unpenalized.coef.gamma.cols() != data.q() ||
      unpenalized.coef.theta.size() != data.d() || unpenalized.phi.size() != data.p() - 1) {
    throw ConfigError("unpenalized fit does not match the configuration");
  }

  Estimates init;
  init.phi = IndexParam(masked_phi(unpenalized.phi.values(), active.phi));
  init.theta = unpenalized.coef.theta;
  init.gamma = unpenalized.coef.gamma;
  init.gamma_hnorm = unpenalized.gamma_hnorm;
  init.active = active;
  if (config.fixed_support) {
    for (Eigen::Index h = 0; h < init.theta.size(); ++h) {
      if (!active.theta[h]) init.theta(h) = 0.0;
    }
    for (Eigen::Index k = 0; k < init.gamma.cols(); ++k) {
      if (!active.gamma[k]) {
        init.gamma.col(k).setZero();
        init.gamma_hnorm(k) = 0.0;
      }
    }
  } else {
    apply_threshold(init, config.zero_threshold);
  }
  return iterate(data, config, std::move(init), true);
}

}  // namespace plsivc
