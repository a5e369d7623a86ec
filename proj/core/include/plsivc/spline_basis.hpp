#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace plsivc {

inline constexpr int kMaxSplineDegree = 10;

/// Fraction of the index range added on both sides of the boundary when
/// knots are generated from data.
inline constexpr double kDefaultBoundaryPad = 1e-6;

/// Clamped B-spline knot sequence on [lower, upper].
///
/// The full sequence repeats each boundary knot degree+1 times, so the basis
/// has num_interior + degree + 1 functions and interpolates at both ends.
/// Immutable after construction.
class KnotVector {
 public:
  KnotVector(int degree, double lower, double upper,
             std::vector<double> interior);

  int degree() const noexcept { return degree_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  int num_interior() const noexcept { return static_cast<int>(interior_.size()); }
  int num_basis() const noexcept { return num_interior() + degree_ + 1; }

  std::span<const double> interior() const noexcept { return interior_; }
  std::span<const double> knots() const noexcept { return knots_; }

  /// Widest over narrowest span between consecutive distinct breakpoints
  /// (lower, interior..., upper).
  double mesh_ratio() const;

  /// Knot-span index s with knots()[s] <= u < knots()[s+1], restricted to
  /// the non-degenerate range [degree, num_basis - 1]. Values outside
  /// [lower, upper] map to the first or last span.
  int find_span(double u) const;

 private:
  int degree_;
  double lower_;
  double upper_;
  std::vector<double> interior_;
  std::vector<double> knots_;
};

/// How evaluation treats u outside [lower, upper].
enum class OutOfRange {
  clamp,   // evaluate at the nearest boundary, derivative 0
  extend,  // continue the boundary polynomial piece
};

/// Counts evaluations that fell outside the knot range.
struct EvalDiagnostics {
  std::size_t out_of_range = 0;
};

/// The degree+1 basis functions that can be nonzero at u:
/// B_{first}, ..., B_{first+degree}.
struct LocalBasis {
  int first = 0;
  std::array<double, kMaxSplineDegree + 1> value{};
  std::array<double, kMaxSplineDegree + 1> deriv{};
};

LocalBasis eval_local(const KnotVector& kv, double u, bool with_deriv,
                      OutOfRange mode = OutOfRange::clamp,
                      EvalDiagnostics* diag = nullptr);

/// Dense basis vector B(u) of length num_basis (Cox-de Boor recursion).
Eigen::VectorXd eval_basis(const KnotVector& kv, double u,
                           EvalDiagnostics* diag = nullptr);

/// Dense derivative vector dB/du of length num_basis.
Eigen::VectorXd eval_basis_deriv(const KnotVector& kv, double u,
                                 EvalDiagnostics* diag = nullptr);

/// Exact H = integral of B(u) B(u)^T over [lower, upper].
Eigen::MatrixXd gram_matrix(const KnotVector& kv);

/// Knot vector spanning the range of index_values with num_interior equally
/// spaced interior knots. The range is widened by pad_fraction * (max - min)
/// on each side. Throws DomainError("degenerate index range") when all
/// values coincide.
KnotVector make_knots(std::span<const double> index_values, int num_interior,
                      int degree, double pad_fraction = kDefaultBoundaryPad);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

}  // namespace plsivc
