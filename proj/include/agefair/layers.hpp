#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "agefair/errors.hpp"
#include "agefair/rng.hpp"
#include "agefair/tensor.hpp"

namespace agefair {

enum class Mode { Train, Eval };

// Fully connected layer, y = x W^T + b. Weights are out x in, row-major.
// backward() accumulates into the gradient buffers so that several
// forward/backward pairs can share one optimizer step.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    std::vector<double> grad_weights;
    std::vector<double> grad_bias;

    Tensor2 input_cache;
    bool has_cache = false;

    DenseLayer() = default;
    DenseLayer(std::size_t in_w, std::size_t out_w)
        : in(in_w), out(out_w), weights(in_w * out_w, 0.0), bias(out_w, 0.0),
          grad_weights(in_w * out_w, 0.0), grad_bias(out_w, 0.0) {}

    void init_he_uniform(Rng& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : weights) w = dist(rng);
        for (double& b : bias) b = 0.0;
    }

    Tensor2 forward(const Tensor2& x, Mode mode) {
        if (x.cols != in) throw DimensionError("dense forward: input " + shape_str(x) + ", expected cols " + std::to_string(in));
        Tensor2 y(x.rows, out);
        for (std::size_t i = 0; i < x.rows; ++i) {
            for (std::size_t o = 0; o < out; ++o) {
                double acc = bias[o];
                const double* wrow = &weights[o * in];
                const double* xrow = &x.data[i * x.cols];
                for (std::size_t j = 0; j < in; ++j) acc += wrow[j] * xrow[j];
                y(i, o) = acc;
            }
        }
        if (mode == Mode::Train) {
            input_cache = x;
            has_cache = true;
        }
        return y;
    }

    Tensor2 backward(const Tensor2& g) {
        if (!has_cache) throw StateError("dense backward without prior train-mode forward");
        const Tensor2& x = input_cache;
        if (g.rows != x.rows || g.cols != out) throw DimensionError("dense backward: grad " + shape_str(g));
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* grow = &g.data[i * out];
            const double* xrow = &x.data[i * in];
            for (std::size_t o = 0; o < out; ++o) {
                double* dwrow = &grad_weights[o * in];
                const double go = grow[o];
                for (std::size_t j = 0; j < in; ++j) dwrow[j] += go * xrow[j];
                grad_bias[o] += go;
            }
        }
        Tensor2 dx(x.rows, in);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* grow = &g.data[i * out];
            double* dxrow = &dx.data[i * in];
            for (std::size_t o = 0; o < out; ++o) {
                const double go = grow[o];
                const double* wrow = &weights[o * in];
                for (std::size_t j = 0; j < in; ++j) dxrow[j] += go * wrow[j];
            }
        }
        has_cache = false;
        return dx;
    }
};

// Elementwise max(0, x). Subgradient at 0 is taken as 0.
struct ReluLayer {
    Tensor2 input_cache;
    bool has_cache = false;

    Tensor2 forward(const Tensor2& x, Mode mode) {
        Tensor2 y = x;
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
        if (mode == Mode::Train) {
            input_cache = x;
            has_cache = true;
        }
        return y;
    }

    Tensor2 backward(const Tensor2& g) {
        if (!has_cache) throw StateError("relu backward without prior train-mode forward");
        require_same_shape(g, input_cache, "relu backward");
        Tensor2 dx = g;
        for (std::size_t k = 0; k < dx.data.size(); ++k)
            if (input_cache.data[k] <= 0.0) dx.data[k] = 0.0;
        has_cache = false;
        return dx;
    }
};

// Batch normalization. Train mode normalizes with batch statistics
// (population variance, 1/n) and updates running stats; eval mode is the
// deterministic affine map through the running stats.
struct BatchNormLayer {
    std::size_t width = 0;
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> grad_gamma;
    std::vector<double> grad_beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double epsilon = 1e-8;  // small enough that normalized batch variance stays within 1e-6 of 1

    Tensor2 xhat_cache;
    std::vector<double> inv_std_cache;
    bool has_cache = false;

    BatchNormLayer() = default;
    explicit BatchNormLayer(std::size_t w)
        : width(w), gamma(w, 1.0), beta(w, 0.0), grad_gamma(w, 0.0), grad_beta(w, 0.0),
          running_mean(w, 0.0), running_var(w, 1.0) {}

    Tensor2 forward(const Tensor2& x, Mode mode) {
        if (x.cols != width) throw DimensionError("batchnorm forward: input " + shape_str(x) + ", expected cols " + std::to_string(width));
        Tensor2 y(x.rows, width);
        if (mode == Mode::Eval) {
            for (std::size_t j = 0; j < width; ++j) {
                const double istd = 1.0 / std::sqrt(running_var[j] + epsilon);
                for (std::size_t i = 0; i < x.rows; ++i)
                    y(i, j) = gamma[j] * (x(i, j) - running_mean[j]) * istd + beta[j];
            }
            return y;
        }
        if (x.rows < 2) throw InputError("batchnorm train-mode forward requires batch >= 2");
        const double n = static_cast<double>(x.rows);
        xhat_cache = Tensor2(x.rows, width);
        inv_std_cache.assign(width, 0.0);
        for (std::size_t j = 0; j < width; ++j) {
            double mu = 0.0;
            for (std::size_t i = 0; i < x.rows; ++i) mu += x(i, j);
            mu /= n;
            double var = 0.0;
            for (std::size_t i = 0; i < x.rows; ++i) {
                const double d = x(i, j) - mu;
                var += d * d;
            }
            var /= n;
            const double istd = 1.0 / std::sqrt(var + epsilon);
            inv_std_cache[j] = istd;
            for (std::size_t i = 0; i < x.rows; ++i) {
                const double xh = (x(i, j) - mu) * istd;
                xhat_cache(i, j) = xh;
                y(i, j) = gamma[j] * xh + beta[j];
            }
            running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * mu;
            running_var[j] = (1.0 - momentum) * running_var[j] + momentum * var;
        }
        has_cache = true;
        return y;
    }

    Tensor2 backward(const Tensor2& g) {
        if (!has_cache) throw StateError("batchnorm backward without prior train-mode forward");
        require_same_shape(g, xhat_cache, "batchnorm backward");
        const double n = static_cast<double>(g.rows);
        Tensor2 dx(g.rows, width);
        for (std::size_t j = 0; j < width; ++j) {
            double sum_g = 0.0;
            double sum_gx = 0.0;
            for (std::size_t i = 0; i < g.rows; ++i) {
                sum_g += g(i, j);
                sum_gx += g(i, j) * xhat_cache(i, j);
            }
            grad_gamma[j] += sum_gx;
            grad_beta[j] += sum_g;
            const double scale = gamma[j] * inv_std_cache[j] / n;
            for (std::size_t i = 0; i < g.rows; ++i)
                dx(i, j) = scale * (n * g(i, j) - sum_g - xhat_cache(i, j) * sum_gx);
        }
        has_cache = false;
        return dx;
    }
};

}  // namespace agefair
