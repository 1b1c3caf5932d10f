#include "adtheme/optim.hpp"

#include <cmath>

namespace adtheme {

void Adam::step(ParamStore& params, const GradMap& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    Mat& p = params.at(name);
    Mat& m = m_.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
    Mat& v = v_.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
    m = b1_ * m + (1.0 - b1_) * g;
    v = b2_ * v + (1.0 - b2_) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
  }
}

void Adadelta::step(ParamStore& params, const GradMap& grads) {
  for (const auto& [name, g] : grads) {
    Mat& p = params.at(name);
    Mat& ag = acc_g_.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
    Mat& ad = acc_dx_.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
    ag = rho_ * ag + (1.0 - rho_) * g.cwiseProduct(g);
    Mat dx = -((ad.array() + eps_).sqrt() / (ag.array() + eps_).sqrt() * g.array()).matrix();
    ad = rho_ * ad + (1.0 - rho_) * dx.cwiseProduct(dx);
    p += lr_ * dx;
  }
}

}  // namespace adtheme
