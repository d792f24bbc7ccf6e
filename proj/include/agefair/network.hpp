#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "agefair/layers.hpp"

namespace agefair {

using Layer = std::variant<DenseLayer, ReluLayer, BatchNormLayer>;

// A named view of one parameter buffer and its gradient buffer. Traversal
// order (layer order, weights before bias, gamma before beta) is the
// canonical order for optimizer state and serialization.
struct ParamRef {
    std::string name;
    std::vector<double>* values;
    std::vector<double>* grads;
};

// Feedforward stack of dense / relu / batchnorm layers. Single-owner mutable
// object: forward(Train) caches what backward needs, backward accumulates
// into the gradient buffers and consumes the cache.
class Network {
public:
    Network() = default;
    Network(std::size_t input_width, std::vector<Layer> layers)
        : input_width_(input_width), layers_(std::move(layers)) {
        std::size_t w = input_width_;
        for (const Layer& l : layers_) {
            if (const auto* d = std::get_if<DenseLayer>(&l)) {
                if (d->in != w) throw DimensionError("layer widths do not chain: expected " + std::to_string(w) + ", dense takes " + std::to_string(d->in));
                w = d->out;
            } else if (const auto* b = std::get_if<BatchNormLayer>(&l)) {
                if (b->width != w) throw DimensionError("layer widths do not chain at batchnorm");
            }
        }
        output_width_ = w;
    }

    // Dense(+ReLU) hidden stack with one batchnorm immediately before the
    // output layer. hidden may be empty, giving a single linear layer.
    static Network mlp(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output, Rng& rng) {
        std::vector<Layer> layers;
        std::size_t w = input;
        for (std::size_t h : hidden) {
            DenseLayer d(w, h);
            d.init_he_uniform(rng);
            layers.emplace_back(std::move(d));
            layers.emplace_back(ReluLayer{});
            w = h;
        }
        if (!hidden.empty()) layers.emplace_back(BatchNormLayer(w));
        DenseLayer head(w, output);
        head.init_he_uniform(rng);
        layers.emplace_back(std::move(head));
        return Network(input, std::move(layers));
    }

    std::size_t input_width() const { return input_width_; }
    std::size_t output_width() const { return output_width_; }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    Tensor2 forward(const Tensor2& x, Mode mode) {
        if (x.cols != input_width_)
            throw DimensionError("forward: input " + shape_str(x) + ", network takes " + std::to_string(input_width_) + " columns");
        Tensor2 h = x;
        for (Layer& l : layers_)
            h = std::visit([&](auto& ly) { return ly.forward(h, mode); }, l);
        if (mode == Mode::Train) ready_for_backward_ = true;
        return h;
    }

    // Accumulates parameter gradients and returns the gradient with respect
    // to the input, for chaining across component networks.
    Tensor2 backward(const Tensor2& upstream) {
        if (!ready_for_backward_) throw StateError("backward without a train-mode forward since the last backward");
        Tensor2 g = upstream;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
            g = std::visit([&](auto& ly) { return ly.backward(g); }, *it);
        ready_for_backward_ = false;
        return g;
    }

    void zero_grad() {
        for_each_param([](ParamRef p) { std::fill(p.grads->begin(), p.grads->end(), 0.0); });
    }

    void for_each_param(const std::function<void(ParamRef)>& fn) {
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            const std::string prefix = "layer" + std::to_string(li);
            if (auto* d = std::get_if<DenseLayer>(&layers_[li])) {
                fn({prefix + ".dense.weights", &d->weights, &d->grad_weights});
                fn({prefix + ".dense.bias", &d->bias, &d->grad_bias});
            } else if (auto* b = std::get_if<BatchNormLayer>(&layers_[li])) {
                fn({prefix + ".batchnorm.gamma", &b->gamma, &b->grad_gamma});
                fn({prefix + ".batchnorm.beta", &b->beta, &b->grad_beta});
            }
        }
    }

    // Trainable parameters flattened in canonical order.
    std::vector<double> parameter_snapshot() {
        std::vector<double> snap;
        for_each_param([&](ParamRef p) { snap.insert(snap.end(), p.values->begin(), p.values->end()); });
        return snap;
    }

private:
    std::size_t input_width_ = 0;
    std::size_t output_width_ = 0;
    std::vector<Layer> layers_;
    bool ready_for_backward_ = false;
};

}  // namespace agefair
