#include "nlnde/optimizer.hpp"

#include <cmath>

#include "nlnde/errors.hpp"

namespace nlnde {

double clip_global_norm(const std::vector<ad::Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto* p : params) p->grad *= f;
  }
  return norm;
}

void Nadam::step(const std::vector<ad::Parameter*>& params) {
  for (const auto* p : params) {
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) {
      throw ConfigError("gradient shape mismatch for parameter '" + p->name + "'");
    }
    if (!p->grad.allFinite()) throw DataError("non-finite gradient in parameter '" + p->name + "'");
  }
  clip_global_norm(params, config_.clip_norm);

  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  for (auto* p : params) {
    Slot& s = slots_[p];
    if (s.t == 0) {
      s.m = ad::Matrix::Zero(p->value.rows(), p->value.cols());
      s.v = ad::Matrix::Zero(p->value.rows(), p->value.cols());
    } else if (s.m.rows() != p->value.rows() || s.m.cols() != p->value.cols()) {
      throw ConfigError("parameter '" + p->name + "' changed shape between steps");
    }
    ++s.t;
    const double t = static_cast<double>(s.t);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    s.m = b1 * s.m + (1.0 - b1) * p->grad;
    s.v = b2 * s.v + (1.0 - b2) * p->grad.cwiseAbs2();
    const ad::Matrix num = (b1 / c1) * s.m + ((1.0 - b1) / c1) * p->grad;
    const ad::Matrix den = (s.v / c2).cwiseSqrt().array() + config_.eps;
    p->value.array() -= config_.lr * num.array() / den.array();
    p->zero_grad();
  }
}

std::uint64_t Nadam::steps(const ad::Parameter& p) const {
  auto it = slots_.find(&p);
  return it == slots_.end() ? 0 : it->second.t;
}

}  // namespace nlnde
