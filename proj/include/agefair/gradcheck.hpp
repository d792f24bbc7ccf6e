#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "agefair/losses.hpp"
#include "agefair/network.hpp"

namespace agefair {

using LossFn = std::function<LossResult(const Tensor2& output)>;

// Central finite-difference verification of the backward pass. Works on a
// copy of the network; train-mode forwards so that batchnorm gradients are
// checked against the same statistics the training path uses.
// Returns max over parameters of |analytic - numeric| / max(|a|, |n|, 1e-8).
inline double gradcheck(Network net, const LossFn& loss, const Tensor2& x, double h = 1e-4) {
    net.zero_grad();
    {
        const Tensor2 out = net.forward(x, Mode::Train);
        const LossResult lr = loss(out);
        net.backward(lr.grad);
    }
    std::vector<std::vector<double>> analytic;
    net.for_each_param([&](ParamRef p) { analytic.push_back(*p.grads); });

    const auto eval = [&]() {
        const Tensor2 out = net.forward(x, Mode::Train);
        return loss(out).value;
    };

    double max_rel = 0.0;
    std::size_t buf = 0;
    net.for_each_param([&](ParamRef p) {
        for (std::size_t k = 0; k < p.values->size(); ++k) {
            double& theta = (*p.values)[k];
            const double saved = theta;
            theta = saved + h;
            const double lp = eval();
            theta = saved - h;
            const double lm = eval();
            theta = saved;
            const double numeric = (lp - lm) / (2.0 * h);
            const double a = analytic[buf][k];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
        ++buf;
    });
    return max_rel;
}

}  // namespace agefair
