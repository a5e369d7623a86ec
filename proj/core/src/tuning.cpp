#include "plsivc/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "plsivc/errors.hpp"
#include "plsivc/rng.hpp"

namespace plsivc {

std::vector<int> default_knot_grid(Eigen::Index n) {
  // Guard against pow rounding just below an integer root (n = 32, 243, ...).
  int root = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 0.2) + 1e-9));
  std::vector<int> grid;
  for (int k = std::max(1, root - 1); k <= root + 2; ++k) grid.push_back(k);
  return grid;
}

std::vector<double> log_lambda_grid(double scale, int count, double lo, double hi) {
  if (!(scale > 0.0) || !(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw ConfigError("invalid lambda grid specification");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int j = 0; j < count; ++j) {
    const double t = count == 1 ? 0.0 : static_cast<double>(j) / (count - 1);
    grid[j] = scale * std::exp(a + t * (b - a));
  }
  return grid;
}

void TuningGrid::validate(Eigen::Index n) const {
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambda candidates must be positive");
  }
  for (int k : knots) {
    if (k < 0) throw ConfigError("knot counts must be non-negative");
  }
  if (folds < 2 || folds > n) throw ConfigError("fold count must lie in [2, n]");
}

PenaltySpec adaptive_lambdas(double lambda, const FitResult& unpenalized,
                             PenaltyFamily family, double a) {
  const auto scale = [lambda](double mag) {
    mag = std::abs(mag);
    return mag < kAdaptiveFloor ? kAdaptiveCap * lambda : lambda / mag;
  };
  PenaltySpec spec;
  spec.family = family;
  spec.a = a;
  spec.lambda = lambda;
  spec.lambda_phi = unpenalized.phi.values().unaryExpr(scale);
  spec.lambda_theta = unpenalized.coef.theta.unaryExpr(scale);
  spec.lambda_gamma = unpenalized.gamma_hnorm.unaryExpr(scale);
  return spec;
}

std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int folds,
                                                  std::uint64_t seed) {
  if (folds < 2 || folds > n) throw ConfigError("fold count must lie in [2, n]");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  // Fisher-Yates with a SplitMix stream so the split does not depend on the
  // standard library's distribution implementations.
  std::uint64_t state = derive_seed(seed, (static_cast<std::uint64_t>(n) << 20) ^
                                              static_cast<std::uint64_t>(folds));
  for (std::size_t i = perm.size(); i > 1; --i) {
    state = splitmix64(state);
    const std::size_t j = static_cast<std::size_t>(state % i);
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < perm.size(); ++i) out[i % out.size()].push_back(perm[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

CvCache::CvCache(const Dataset& data, FitConfig base, int folds, std::uint64_t seed)
    : data_(data), base_(std::move(base)), folds_(make_folds(data.n(), folds, seed)) {
  train_.resize(folds_.size());
  test_.resize(folds_.size());
}

FitConfig CvCache::config_for(int num_interior) const {
  FitConfig cfg = base_;
  cfg.num_interior = num_interior;
  cfg.penalty = PenaltySpec{};
  return cfg;
}

const Dataset& CvCache::train(int fold) {
  auto& slot = train_.at(static_cast<std::size_t>(fold));
  if (!slot) {
    const auto& held = folds_[static_cast<std::size_t>(fold)];
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(data_.n()) - held.size());
    std::size_t h = 0;
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      if (h < held.size() && held[h] == i) {
        ++h;
      } else {
        rows.push_back(i);
      }
    }
    slot = data_.subset(rows);
  }
  return *slot;
}

const Dataset& CvCache::test(int fold) {
  auto& slot = test_.at(static_cast<std::size_t>(fold));
  if (!slot) slot = data_.subset(folds_[static_cast<std::size_t>(fold)]);
  return *slot;
}

const FitResult& CvCache::unwrap(const Entry& e) const {
  switch (e.kind) {
    case 0: return *e.fit;
    case 1: throw DataError(e.error);
    case 2: throw NumericalError(e.error);
    default: throw Error(e.error);
  }
}

namespace {

template <typename Fn>
void fill_entry(auto& entry, Fn&& fn) {
  try {
    entry.fit = fn();
    entry.kind = 0;
  } catch (const DataError& e) {
    entry.kind = 1;
    entry.error = e.what();
  } catch (const NumericalError& e) {
    entry.kind = 2;
    entry.error = e.what();
  } catch (const Error& e) {
    entry.kind = 3;
    entry.error = e.what();
  }
}

}  // namespace

const FitResult& CvCache::full(int num_interior) {
  auto [it, fresh] = full_.try_emplace(num_interior);
  if (fresh) {
    fill_entry(it->second, [&] { return fit_unpenalized(data_, config_for(num_interior)); });
  }
  return unwrap(it->second);
}

const FitResult& CvCache::fold(int num_interior, int fold) {
  const auto key = std::make_pair(num_interior, fold);
  auto it = fold_.find(key);
  if (it == fold_.end()) {
    const FitResult& start = full(num_interior);
    const Dataset& tr = train(fold);
    Entry e;
    fill_entry(e, [&] { return fit_unpenalized(tr, config_for(num_interior), start.phi); });
    if (e.kind == 1) e.error = "insufficient fold size (" + e.error + ")";
    it = fold_.emplace(key, std::move(e)).first;
  }
  return unwrap(it->second);
}

double cv_score(CvCache& cache, int num_interior, double lambda, PenaltyFamily family,
                double a) {
  double score = 0.0;
  for (int f = 0; f < static_cast<int>(cache.folds().size()); ++f) {
    const FitResult& unpen = cache.fold(num_interior, f);
    FitConfig cfg = cache.config_for(num_interior);
    cfg.penalty = adaptive_lambdas(lambda, unpen, family, a);
    const FitResult fit = fit_penalized(cache.train(f), cfg, unpen);
    const Dataset& te = cache.test(f);
    score += (te.y - fit.predict(te)).squaredNorm();
  }
  return score;
}

double cv_score(const Dataset& data, int num_interior, double lambda, int folds,
                const FitConfig& config, std::uint64_t seed) {
  CvCache cache(data, config, folds, seed);
  return cv_score(cache, num_interior, lambda, config.penalty.family, config.penalty.a);
}

double cv_score_unpenalized(CvCache& cache, int num_interior) {
  double score = 0.0;
  for (int f = 0; f < static_cast<int>(cache.folds().size()); ++f) {
    const FitResult& fit = cache.fold(num_interior, f);
    const Dataset& te = cache.test(f);
    score += (te.y - fit.predict(te)).squaredNorm();
  }
  return score;
}

namespace {

std::string failure_list(const std::vector<CvPoint>& table) {
  std::ostringstream os;
  os << "every tuning grid point failed:";
  for (const auto& pt : table) {
    os << "\n  K=" << pt.num_interior << " lambda=" << pt.lambda << ": " << pt.error;
  }
  return os.str();
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Selection select(CvCache& cache, const TuningGrid& grid, PenaltyFamily family, double a) {
  grid.validate(cache.data().n());
  if (static_cast<int>(cache.folds().size()) != grid.folds) {
    throw ConfigError("tuning grid fold count does not match the cache");
  }
  const std::vector<int> knots =
      sorted_unique(grid.knots.empty() ? default_knot_grid(cache.data().n()) : grid.knots);

  Selection sel;
  std::vector<double> lambdas = grid.lambdas;
  if (lambdas.empty()) {
    for (int k : knots) {
      try {
        const FitResult& f = cache.full(k);
        sel.sigma_hat = std::sqrt(f.rss / static_cast<double>(cache.data().n()));
        break;
      } catch (const Error&) {
      }
    }
    if (!(sel.sigma_hat > 0.0)) sel.sigma_hat = 1.0;
    lambdas = log_lambda_grid(sel.sigma_hat);
  }
  std::sort(lambdas.begin(), lambdas.end());

  const CvPoint* best = nullptr;
  for (int k : knots) {
    for (double lambda : lambdas) {
      CvPoint pt;
      pt.num_interior = k;
      pt.lambda = lambda;
      try {
        pt.score = cv_score(cache, k, lambda, family, a);
        pt.ok = std::isfinite(pt.score);
        if (!pt.ok) pt.error = "non-finite score";
      } catch (const Error& e) {
        pt.error = e.what();
      }
      sel.table.push_back(pt);
    }
  }
  for (const auto& pt : sel.table) {
    if (pt.ok && (best == nullptr || pt.score < best->score)) best = &pt;
  }
  if (best == nullptr) throw NumericalError(failure_list(sel.table));

  sel.num_interior = best->num_interior;
  sel.lambda = best->lambda;
  sel.unpenalized = cache.full(sel.num_interior);
  FitConfig cfg = cache.config_for(sel.num_interior);
  cfg.penalty = adaptive_lambdas(sel.lambda, sel.unpenalized, family, a);
  sel.penalty = cfg.penalty;
  sel.fit = fit_penalized(cache.data(), cfg, sel.unpenalized);
  return sel;
}

Selection select(const Dataset& data, const TuningGrid& grid, const FitConfig& config,
                 std::uint64_t seed) {
  grid.validate(data.n());
  CvCache cache(data, config, grid.folds, seed);
  return select(cache, grid, config.penalty.family, config.penalty.a);
}

KnotSelection select_knots_unpenalized(CvCache& cache, const std::vector<int>& knots) {
  KnotSelection sel;
  const CvPoint* best = nullptr;
  for (int k : sorted_unique(knots.empty() ? default_knot_grid(cache.data().n()) : knots)) {
    CvPoint pt;
    pt.num_interior = k;
    try {
      pt.score = cv_score_unpenalized(cache, k);
      pt.ok = std::isfinite(pt.score);
    } catch (const Error& e) {
      pt.error = e.what();
    }
    sel.table.push_back(pt);
  }
  for (const auto& pt : sel.table) {
    if (pt.ok && (best == nullptr || pt.score < best->score)) best = &pt;
  }
  if (best == nullptr) throw NumericalError(failure_list(sel.table));
  sel.num_interior = best->num_interior;
  sel.fit = cache.full(sel.num_interior);
  return sel;
}

}  // namespace plsivc
