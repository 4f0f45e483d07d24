#include "vda/adam.hpp"

#include <cmath>

#include "vda/errors.hpp"

namespace vda {

Adam::Adam(std::vector<Tensor*> params, double base_lr, std::size_t warmup_steps,
           double beta1, double beta2, double eps)
    : params_(std::move(params)),
      base_lr_(base_lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      warmup_steps_(warmup_steps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Tensor* p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

double Adam::current_lr() const {
    if (warmup_steps_ > 0 && step_ < warmup_steps_)
        return base_lr_ * static_cast<double>(step_ + 1) / static_cast<double>(warmup_steps_);
    return base_lr_;
}

void Adam::step() {
    const double lr = current_lr();
    const double t = static_cast<double>(step_ + 1);
    const double bc1 = 1.0 - std::pow(beta1_, t);
    const double bc2 = 1.0 - std::pow(beta2_, t);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Tensor& p = *params_[k];
        if (!p.has_grad()) throw StateError("Adam::step: parameter has no gradient");
        auto& g = p.grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
        p.zero_grad();
    }
    ++step_;
}

}  // namespace vda
