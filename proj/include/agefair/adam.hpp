#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "agefair/errors.hpp"
#include "agefair/network.hpp"

namespace agefair {

// Adam with decoupled L2 weight decay: the decay term lr * wd * theta is
// subtracted alongside the bias-corrected moment update instead of being
// folded into the gradient.
struct AdamConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-3;
};

struct AdamState {
    AdamConfig cfg;
    long step = 0;
    std::vector<std::vector<double>> m;  // first moments, one buffer per ParamRef
    std::vector<std::vector<double>> v;  // second moments

    AdamState() = default;
    AdamState(Network& net, AdamConfig c) : cfg(c) {
        net.for_each_param([&](ParamRef p) {
            m.emplace_back(p.values->size(), 0.0);
            v.emplace_back(p.values->size(), 0.0);
        });
    }
};

inline void adam_step(Network& net, AdamState& state) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(state.cfg.beta2, t);
    std::size_t idx = 0;
    net.for_each_param([&](ParamRef p) {
        if (idx >= state.m.size()) throw StateError("adam_step: state not initialized for this network");
        std::vector<double>& m = state.m[idx];
        std::vector<double>& v = state.v[idx];
        if (m.size() != p.values->size()) throw DimensionError("adam_step: moment buffer shape mismatch at " + p.name);
        for (std::size_t k = 0; k < p.values->size(); ++k) {
            const double g = (*p.grads)[k];
            if (!std::isfinite(g)) throw NumericError("non-finite gradient at " + p.name);
            m[k] = state.cfg.beta1 * m[k] + (1.0 - state.cfg.beta1) * g;
            v[k] = state.cfg.beta2 * v[k] + (1.0 - state.cfg.beta2) * g * g;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            double& theta = (*p.values)[k];
            theta -= state.cfg.learning_rate * (mhat / (std::sqrt(vhat) + state.cfg.epsilon) + state.cfg.weight_decay * theta);
        }
        ++idx;
    });
}

}  // namespace agefair
