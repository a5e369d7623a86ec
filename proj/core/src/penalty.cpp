#include "plsivc/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plsivc/errors.hpp"

namespace plsivc {

std::string_view to_string(PenaltyFamily family) {
  switch (family) {
    case PenaltyFamily::scad: return "scad";
    case PenaltyFamily::lasso: return "lasso";
  }
  return "unknown";
}

PenaltyFamily parse_penalty_family(std::string_view name) {
  if (name == "scad" || name == "SCAD") return PenaltyFamily::scad;
  if (name == "lasso" || name == "LASSO") return PenaltyFamily::lasso;
  throw ConfigError("unknown penalty family '" + std::string(name) + "'");
}

void PenaltySpec::validate() const {
  if (family == PenaltyFamily::scad && !(a > 2.0)) {
    throw ConfigError("SCAD parameter a must exceed 2");
  }
  const auto check = [](double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("tuning parameters must be finite and non-negative");
    }
  };
  check(lambda);
  for (const auto* block : {&lambda_phi, &lambda_theta, &lambda_gamma}) {
    for (Eigen::Index i = 0; i < block->size(); ++i) check((*block)(i));
  }
}

bool PenaltySpec::disabled() const {
  const auto zero = [this](const Eigen::VectorXd& v) {
    return v.size() == 0 ? lambda == 0.0 : (v.array() == 0.0).all();
  };
  return zero(lambda_phi) && zero(lambda_theta) && zero(lambda_gamma);
}

double scad_deriv(double lambda, double a, double w) {
  if (!(a > 2.0)) throw ConfigError("SCAD parameter a must exceed 2");
  if (lambda == 0.0) return 0.0;
  if (w <= lambda) return lambda;
  const double excess = a * lambda - w;
  return excess > 0.0 ? excess / (a - 1.0) : 0.0;
}

double scad_value(double lambda, double a, double w) {
  if (!(a > 2.0)) throw ConfigError("SCAD parameter a must exceed 2");
  if (lambda == 0.0) return 0.0;
  if (w <= lambda) return lambda * w;
  if (w <= a * lambda) {
    return -(w * w - 2.0 * a * lambda * w + lambda * lambda) / (2.0 * (a - 1.0));
  }
  return 0.5 * (a + 1.0) * lambda * lambda;
}

double penalty_deriv(PenaltyFamily family, double a, double lambda, double w) {
  return family == PenaltyFamily::scad ? scad_deriv(lambda, a, w) : lambda;
}

double penalty_value(PenaltyFamily family, double a, double lambda, double w) {
  return family == PenaltyFamily::scad ? scad_value(lambda, a, w) : lambda * w;
}

double lqa_weight(PenaltyFamily family, double a, double lambda, double w0) {
  if (lambda == 0.0) return 0.0;
  if (!(w0 > 0.0)) {
    throw DomainError("LQA weight needs a positive expansion point");
  }
  return penalty_deriv(family, a, lambda, w0) / w0;
}

LqaWeights lqa_weights(const PenaltySpec& spec, const Eigen::VectorXd& phi,
                       const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& gamma_hnorms) {
  const auto fill = [&spec](const Eigen::VectorXd& v, auto lambda_of) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double mag = std::abs(v(i));
      if (mag > 0.0) w(i) = lqa_weight(spec.family, spec.a, lambda_of(i), mag);
    }
    return w;
  };
  LqaWeights out;
  out.phi = fill(phi, [&](Eigen::Index i) { return spec.for_phi(i); });
  out.theta = fill(theta, [&](Eigen::Index i) { return spec.for_theta(i); });
  out.gamma = fill(gamma_hnorms, [&](Eigen::Index i) { return spec.for_gamma(i); });
  return out;
}

WeightMatrices build_weight_matrices(const Eigen::VectorXd& phi,
                                     const Eigen::VectorXd& theta,
                                     const Eigen::MatrixXd& gamma,
                                     const PenaltySpec& spec,
                                     const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols() || gamma.rows() != gram.rows()) {
    throw std::invalid_argument(
        "build_weight_matrices: coefficient blocks do not match the Gram matrix");
  }
  const Eigen::Index nb = gram.rows();
  const Eigen::Index q = gamma.cols();
  const Eigen::Index d = theta.size();
  Eigen::VectorXd hnorms(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    hnorms(k) = std::sqrt(std::max(0.0, gamma.col(k).dot(gram * gamma.col(k))));
  }
  const LqaWeights w = lqa_weights(spec, phi, theta, hnorms);

  WeightMatrices m;
  m.sigma_phi = w.phi.asDiagonal();
  m.sigma_alpha = Eigen::MatrixXd::Zero(d + q * nb, d + q * nb);
  m.sigma_alpha.topLeftCorner(d, d) = w.theta.asDiagonal();
  for (Eigen::Index k = 0; k < q; ++k) {
    m.sigma_alpha.block(d + k * nb, d + k * nb, nb, nb) = w.gamma(k) * gram;
  }
  return m;
}

}  // namespace plsivc
