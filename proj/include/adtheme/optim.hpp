#pragma once

#include "adtheme/params.hpp"

namespace adtheme {

// Adam (Kingma & Ba) over a ParamStore. Parameters that never receive a
// gradient keep zero moments and are left untouched.
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(ParamStore& params, const GradMap& grads);

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  GradMap m_, v_;
};

// Adadelta (Zeiler) with accumulated squared gradients and updates.
class Adadelta {
 public:
  Adadelta(double lr = 1.0, double rho = 0.95, double eps = 1e-6)
      : lr_(lr), rho_(rho), eps_(eps) {}

  void step(ParamStore& params, const GradMap& grads);

 private:
  double lr_, rho_, eps_;
  GradMap acc_g_, acc_dx_;
};

}  // namespace adtheme
