#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "agefair/errors.hpp"
#include "agefair/tensor.hpp"

namespace agefair {

struct LossResult {
    double value = 0.0;
    Tensor2 grad;  // with respect to the network output that produced it
};

// Row-wise softmax, max-subtracted for stability.
inline Tensor2 softmax(const Tensor2& logits) {
    Tensor2 p(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            const double e = std::exp(logits(i, j) - mx);
            p(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < logits.cols; ++j) p(i, j) /= sum;
    }
    return p;
}

// Mean negative log likelihood of softmax(logits) at the given class labels.
// Gradient is (softmax - onehot) / batch.
inline LossResult nll_loss(const Tensor2& logits, const std::vector<int>& labels) {
    if (logits.rows == 0) throw InputError("nll_loss: empty batch");
    if (labels.size() != logits.rows) throw InputError("nll_loss: one label per row required");
    const int classes = static_cast<int>(logits.cols);
    for (int y : labels)
        if (y < 0 || y >= classes)
            throw InputError("nll_loss: label " + std::to_string(y) + " outside [0," + std::to_string(classes) + ")");
    const double n = static_cast<double>(logits.rows);
    LossResult res;
    res.grad = softmax(logits);
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        // -log softmax via logsumexp, avoiding log of an underflowed prob
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) lse += std::exp(logits(i, j) - mx);
        loss += (mx + std::log(lse)) - logits(i, static_cast<std::size_t>(labels[i]));
        res.grad(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    }
    for (double& v : res.grad.data) v /= n;
    res.value = loss / n;
    return res;
}

// Mean over the batch of the squared row norm, E ||pred - target||^2.
// Gradient is 2 (pred - target) / batch.
inline LossResult l2_loss(const Tensor2& pred, const Tensor2& target) {
    require_same_shape(pred, target, "l2_loss");
    if (pred.rows == 0) throw InputError("l2_loss: empty batch");
    const double n = static_cast<double>(pred.rows);
    LossResult res;
    res.grad = Tensor2(pred.rows, pred.cols);
    double loss = 0.0;
    for (std::size_t k = 0; k < pred.data.size(); ++k) {
        const double d = pred.data[k] - target.data[k];
        loss += d * d;
        res.grad.data[k] = 2.0 * d / n;
    }
    res.value = loss / n;
    return res;
}

// Mean binary entropy of the given probabilities, with 0 log 0 = 0.
inline double entropy_of_bernoulli(const std::vector<double>& probs) {
    if (probs.empty()) throw InputError("entropy_of_bernoulli: empty input");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw InputError("entropy_of_bernoulli: probability outside [0,1]");
        double h = 0.0;
        if (p > 0.0) h -= p * std::log(p);
        if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
        total += h;
    }
    return total / static_cast<double>(probs.size());
}

// Mean entropy of softmax(logits) rows, differentiable in the logits.
// dH/dlogit_j = -p_j (log p_j + H_row) for each row.
inline LossResult softmax_entropy(const Tensor2& logits) {
    if (logits.rows == 0) throw InputError("softmax_entropy: empty batch");
    const double n = static_cast<double>(logits.rows);
    const Tensor2 p = softmax(logits);
    LossResult res;
    res.grad = Tensor2(logits.rows, logits.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
        double h = 0.0;
        for (std::size_t j = 0; j < p.cols; ++j)
            if (p(i, j) > 0.0) h -= p(i, j) * std::log(p(i, j));
        total += h;
        for (std::size_t j = 0; j < p.cols; ++j) {
            const double pj = p(i, j);
            res.grad(i, j) = pj > 0.0 ? -pj * (std::log(pj) + h) / n : 0.0;
        }
    }
    res.value = total / n;
    return res;
}

}  // namespace agefair
