#include "plsivc/spline_basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "plsivc/errors.hpp"

namespace plsivc {

KnotVector::KnotVector(int degree, double lower, double upper,
                       std::vector<double> interior)
    : degree_(degree), lower_(lower), upper_(upper), interior_(std::move(interior)) {
  if (degree_ < 0 || degree_ > kMaxSplineDegree) {
    throw ConfigError("spline degree must lie in [0, " +
                      std::to_string(kMaxSplineDegree) + "]");
  }
  if (!std::isfinite(lower_) || !std::isfinite(upper_) || !(lower_ < upper_)) {
    throw DomainError("knot vector needs a finite interval with lower < upper");
  }
  for (std::size_t j = 0; j < interior_.size(); ++j) {
    const double c = interior_[j];
    if (!(c > lower_ && c < upper_)) {
      throw DomainError("interior knots must lie strictly inside (lower, upper)");
    }
    if (j > 0 && c < interior_[j - 1]) {
      throw DomainError("interior knots must be non-decreasing");
    }
  }
  knots_.reserve(interior_.size() + 2 * (degree_ + 1));
  knots_.insert(knots_.end(), degree_ + 1, lower_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), degree_ + 1, upper_);
}

double KnotVector::mesh_ratio() const {
  std::vector<double> breaks;
  breaks.reserve(interior_.size() + 2);
  breaks.push_back(lower_);
  breaks.insert(breaks.end(), interior_.begin(), interior_.end());
  breaks.push_back(upper_);
  double widest = 0.0;
  double narrowest = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < breaks.size(); ++j) {
    const double h = breaks[j] - breaks[j - 1];
    if (h <= 0.0) continue;
    widest = std::max(widest, h);
    narrowest = std::min(narrowest, h);
  }
  return widest / narrowest;
}

int KnotVector::find_span(double u) const {
  const int last = num_basis() - 1;
  if (u >= knots_[last + 1]) {
    // Right end: the last span whose left knot is strictly below upper.
    int s = last;
    while (s > degree_ && knots_[s] >= knots_[last + 1]) --s;
    return s;
  }
  if (u < knots_[degree_]) return degree_;
  const auto begin = knots_.begin() + degree_;
  const auto end = knots_.begin() + last + 1;
  const auto it = std::upper_bound(begin, end, u);
  return static_cast<int>(it - knots_.begin()) - 1;
}

namespace {

// Nonzero B-splines of the given degree on span s at u (triangular
// Cox-de Boor scheme). out[r] holds B_{s-degree+r}.
void basis_on_span(std::span<const double> t, int s, double u, int degree,
                   double* out) {
  std::array<double, kMaxSplineDegree + 1> left{};
  std::array<double, kMaxSplineDegree + 1> right{};
  out[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = u - t[s + 1 - j];
    right[j] = t[s + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

}  // namespace

LocalBasis eval_local(const KnotVector& kv, double u, bool with_deriv,
                      OutOfRange mode, EvalDiagnostics* diag) {
  LocalBasis lb;
  const int p = kv.degree();
  const auto t = kv.knots();
  bool outside = false;
  if (u < kv.lower() || u > kv.upper() || !std::isfinite(u)) {
    outside = true;
    if (diag) ++diag->out_of_range;
    if (mode == OutOfRange::clamp || !std::isfinite(u)) {
      u = std::clamp(u, kv.lower(), kv.upper());
      if (!std::isfinite(u)) u = kv.lower();
    }
  }
  const int s = kv.find_span(u);
  lb.first = s - p;
  basis_on_span(t, s, u, p, lb.value.data());

  if (!with_deriv || p == 0 || (outside && mode == OutOfRange::clamp)) {
    return lb;
  }
  std::array<double, kMaxSplineDegree + 1> lower{};
  basis_on_span(t, s, u, p - 1, lower.data());
  // lower[r] holds B_{s-p+1+r, p-1}.
  for (int r = 0; r <= p; ++r) {
    const int i = s - p + r;
    double d = 0.0;
    if (r >= 1) d += lower[r - 1] / (t[i + p] - t[i]);
    if (r <= p - 1) d -= lower[r] / (t[i + p + 1] - t[i + 1]);
    lb.deriv[r] = p * d;
  }
  return lb;
}

Eigen::VectorXd eval_basis(const KnotVector& kv, double u, EvalDiagnostics* diag) {
  const LocalBasis lb = eval_local(kv, u, false, OutOfRange::clamp, diag);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(kv.num_basis());
  for (int r = 0; r <= kv.degree(); ++r) b(lb.first + r) = lb.value[r];
  return b;
}

Eigen::VectorXd eval_basis_deriv(const KnotVector& kv, double u,
                                 EvalDiagnostics* diag) {
  const LocalBasis lb = eval_local(kv, u, true, OutOfRange::clamp, diag);
  Eigen::VectorXd db = Eigen::VectorXd::Zero(kv.num_basis());
  for (int r = 0; r <= kv.degree(); ++r) db(lb.first + r) = lb.deriv[r];
  return db;
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
  // (P_n(x), P_n'(x)) by the three-term recurrence.
  const auto legendre = [n](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [pn, dpn] = legendre(x);
      const double dx = pn / dpn;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double dpn = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dpn * dpn);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

Eigen::MatrixXd gram_matrix(const KnotVector& kv) {
  const int p = kv.degree();
  const int nb = kv.num_basis();
  const auto t = kv.knots();
  // p+1 nodes integrate polynomials of degree 2p+1 exactly; B_i B_j has
  // degree 2p on every span.
  const QuadratureRule rule = gauss_legendre(p + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(nb, nb);
  std::array<double, kMaxSplineDegree + 1> vals{};
  for (int s = p; s < nb; ++s) {
    const double lo = t[s];
    const double hi = t[s + 1];
    if (!(hi > lo)) continue;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
      const double u = mid + half * rule.nodes[g];
      const double w = half * rule.weights[g];
      basis_on_span(t, s, u, p, vals.data());
      for (int a = 0; a <= p; ++a) {
        for (int b = 0; b <= p; ++b) {
          h(s - p + a, s - p + b) += w * vals[a] * vals[b];
        }
      }
    }
  }
  return h;
}

KnotVector make_knots(std::span<const double> index_values, int num_interior,
                      int degree, double pad_fraction) {
  if (index_values.empty()) throw DomainError("degenerate index range");
  if (num_interior < 0) throw ConfigError("number of interior knots must be >= 0");
  const auto [mn, mx] = std::minmax_element(index_values.begin(), index_values.end());
  double a = *mn;
  double b = *mx;
  if (!std::isfinite(a) || !std::isfinite(b) || !(b > a)) {
    throw DomainError("degenerate index range");
  }
  const double pad = pad_fraction * (b - a);
  a -= pad;
  b += pad;
  std::vector<double> interior(num_interior);
  for (int j = 0; j < num_interior; ++j) {
    interior[j] = a + (b - a) * (j + 1) / (num_interior + 1);
  }
  return KnotVector(degree, a, b, std::move(interior));
}

}  // namespace plsivc
