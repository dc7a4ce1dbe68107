#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nlnde/autodiff.hpp"

namespace nlnde::gradcheck {

struct Result {
  std::string name;
  double relative_error = 0.0;
};

// Central differences with step h against the tape gradient, one tensor at a
// time: |analytic - numeric| / max(|analytic|, |numeric|, 1e-12) in the
// Frobenius norm. `loss` builds a fresh tape and returns the scalar.
inline std::vector<Result> check(const std::function<ad::Var(ad::Tape&)>& loss,
                                 const std::vector<ad::Parameter*>& params, double h = 1e-4) {
  for (auto* p : params) p->zero_grad();
  {
    ad::Tape tape;
    tape.backward(loss(tape));
  }
  std::vector<Result> out;
  for (auto* p : params) {
    ad::Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x;
      if (!std::isfinite(saved)) {  // masked entries such as CRF START/STOP
        numeric.data()[i] = 0.0;
        continue;
      }
      x = saved + h;
      double up;
      {
        ad::Tape tape;
        up = loss(tape).scalar();
      }
      x = saved - h;
      double down;
      {
        ad::Tape tape;
        down = loss(tape).scalar();
      }
      x = saved;
      numeric.data()[i] = (up - down) / (2.0 * h);
    }
    const double diff = (p->grad - numeric).norm();
    const double scale = std::max({p->grad.norm(), numeric.norm(), 1e-12});
    out.push_back({p->name, diff / scale});
  }
  return out;
}

inline double worst(const std::vector<Result>& results) {
  double w = 0.0;
  for (const auto& r : results) w = std::max(w, r.relative_error);
  return w;
}

}  // namespace nlnde::gradcheck
