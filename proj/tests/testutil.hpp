#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "vda/tensor.hpp"

namespace vda::testutil {

// Central finite-difference gradient check. `loss_fn` rebuilds the loss
// from the given parameters on every call; returns the max relative error
// between analytic and numeric gradients over all parameter entries.
inline double grad_check(std::vector<Tensor*> params,
                         const std::function<Tensor()>& loss_fn, double h = 1e-5) {
    for (Tensor* p : params) p->zero_grad();
    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        Tensor loss = loss_fn();
        backward(loss);
    }
    for (Tensor* p : params) analytic.push_back(p->grad());

    auto eval = [&]() {
        NoGrad ng;
        return loss_fn().item();
    };

    double max_err = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + h;
            const double up = eval();
            p[i] = saved - h;
            const double down = eval();
            p[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic[k][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
            max_err = std::max(max_err, std::abs(a - numeric) / denom);
        }
        p.zero_grad();
    }
    return max_err;
}

}  // namespace vda::testutil
