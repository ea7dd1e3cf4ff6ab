#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "comfort/errors.hpp"
#include "comfort/rng.hpp"

namespace comfort {

// Dense row-major matrix of 64-bit reals. All arithmetic in this kernel is
// double precision so gradient-check tolerances are meaningful.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }
    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const {
        return a[i * cols + j];
    }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// One fully connected layer: y = W x + b with W of shape out x in.
struct DenseLayer {
    Mat w;
    std::vector<double> b;

    DenseLayer() = default;
    DenseLayer(std::size_t out, std::size_t in) : w(out, in), b(out, 0.0) {}
    std::size_t fan_in() const { return w.cols; }
    std::size_t fan_out() const { return w.rows; }
    std::size_t param_count() const { return w.a.size() + b.size(); }
};

// Symmetric uniform init in +/- sqrt(6 / (fan_in + fan_out)).
void init_dense(DenseLayer& layer, Rng& rng);

std::vector<double> dense_forward(const DenseLayer& layer,
                                  std::span<const double> x);

// Batch forms. X is batch x in; gradients accumulate so a caller can reuse
// buffers across tasks.
Mat dense_forward_batch(const DenseLayer& layer, const Mat& x);
void dense_backward_batch(const DenseLayer& layer, const Mat& x,
                          const Mat& dy, Mat& dw, std::vector<double>& db,
                          Mat& dx);

void tanh_apply(std::span<double> v);
void tanh_apply(Mat& m);
// dA -> dZ given the stored activations A = tanh(Z).
void tanh_backward(const Mat& activations, Mat& grad);

// Exp-normalized with max subtraction; entries > 0 and sum within 1e-12 of 1.
std::vector<double> softmax(std::span<const double> v);
void softmax_rows(Mat& m);

// Inverted dropout: each entry zeroed with probability rate, survivors
// scaled by 1/(1-rate); inference mode is the identity. The mask form
// returns the per-entry scale factors so a backward pass can reuse them.
std::vector<double> dropout_apply(std::span<const double> v, double rate,
                                  Rng& rng, bool training);
Mat dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);
void apply_mask(Mat& m, const Mat& mask);

// -log(p[y]) with p clamped below at 1e-12.
double cross_entropy(std::span<const double> p, std::size_t y);
constexpr double kProbClamp = 1e-12;

enum class OptimizerKind { Adam, Sgd };

// Bias-corrected adaptive-moment state over an ordered set of parameter
// tensors. The step counter advances exactly once per adam_step call.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void init(const std::vector<std::size_t>& sizes);
};

// One update over all registered tensors. Throws DivergenceError on a
// non-finite gradient. params[i] and grads[i] share slot i's size.
void adam_step(OptimizerState& state,
               const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads);

// Central-difference gradient oracle. `loss` re-evaluates the scalar loss
// from the current parameter values; `params`/`analytic` are parallel tensor
// lists. When the total parameter count exceeds `max_checked`, a seeded
// uniform sample of entries is checked instead. Relative error uses
// |a - n| / max(|a|, |n|, 1) so near-zero gradients compare absolutely.
struct GradCheckReport {
    bool pass = false;
    double worst_rel_err = 0.0;
    std::size_t checked = 0;
    std::string worst_location;
};

GradCheckReport finite_diff_check(
    const std::vector<std::span<double>>& params,
    const std::vector<std::span<const double>>& analytic,
    const std::function<double()>& loss, double h, double tolerance,
    std::size_t max_checked = 0, std::uint64_t seed = 0);

}  // namespace comfort
