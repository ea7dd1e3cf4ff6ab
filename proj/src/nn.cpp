#include "comfort/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace comfort {

void init_dense(DenseLayer& layer, Rng& rng) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.fan_in() + layer.fan_out()));
    for (double& w : layer.w.a) w = rng.uniform(-limit, limit);
    std::fill(layer.b.begin(), layer.b.end(), 0.0);
}

std::vector<double> dense_forward(const DenseLayer& layer,
                                  std::span<const double> x) {
    if (x.size() != layer.fan_in())
        throw ValidationError("dense_forward: input size mismatch");
    std::vector<double> y(layer.fan_out());
    for (std::size_t o = 0; o < layer.fan_out(); ++o) {
        const double* w = layer.w.row(o);
        double acc = layer.b[o];
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
        y[o] = acc;
    }
    return y;
}

Mat dense_forward_batch(const DenseLayer& layer, const Mat& x) {
    if (x.cols != layer.fan_in())
        throw ValidationError("dense_forward_batch: input size mismatch");
    Mat y(x.rows, layer.fan_out());
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double* yr = y.row(r);
        for (std::size_t o = 0; o < layer.fan_out(); ++o) {
            const double* w = layer.w.row(o);
            double acc = layer.b[o];
            for (std::size_t i = 0; i < x.cols; ++i) acc += w[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

void dense_backward_batch(const DenseLayer& layer, const Mat& x,
                          const Mat& dy, Mat& dw, std::vector<double>& db,
                          Mat& dx) {
    if (dy.rows != x.rows || dy.cols != layer.fan_out() ||
        x.cols != layer.fan_in())
        throw ValidationError("dense_backward_batch: shape mismatch");
    if (dw.rows != layer.w.rows || dw.cols != layer.w.cols)
        dw = Mat(layer.w.rows, layer.w.cols);
    if (db.size() != layer.b.size()) db.assign(layer.b.size(), 0.0);
    if (dx.rows != x.rows || dx.cols != x.cols) dx = Mat(x.rows, x.cols);
    dx.zero();
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        const double* gy = dy.row(r);
        double* gx = dx.row(r);
        for (std::size_t o = 0; o < layer.fan_out(); ++o) {
            const double g = gy[o];
            if (g == 0.0) continue;
            db[o] += g;
            double* wg = dw.row(o);
            const double* w = layer.w.row(o);
            for (std::size_t i = 0; i < x.cols; ++i) {
                wg[i] += g * xr[i];
                gx[i] += g * w[i];
            }
        }
    }
}

void tanh_apply(std::span<double> v) {
    for (double& x : v) x = std::tanh(x);
}

void tanh_apply(Mat& m) { tanh_apply(std::span<double>(m.a)); }

void tanh_backward(const Mat& activations, Mat& grad) {
    if (grad.rows != activations.rows || grad.cols != activations.cols)
        throw ValidationError("tanh_backward: shape mismatch");
    for (std::size_t i = 0; i < grad.a.size(); ++i) {
        const double a = activations.a[i];
        grad.a[i] *= 1.0 - a * a;
    }
}

std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> p(v.size());
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[i] = std::exp(v[i] - mx);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

void softmax_rows(Mat& m) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.row(r);
        double mx = row[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < m.cols; ++j) row[j] /= sum;
    }
}

std::vector<double> dropout_apply(std::span<const double> v, double rate,
                                  Rng& rng, bool training) {
    std::vector<double> out(v.begin(), v.end());
    if (!training || rate <= 0.0) return out;
    if (rate >= 1.0) throw ConfigError("dropout rate must be below 1");
    const double keep = 1.0 - rate;
    for (double& x : out) {
        if (rng.uniform() < rate)
            x = 0.0;
        else
            x /= keep;
    }
    return out;
}

Mat dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Mat mask(rows, cols);
    if (rate <= 0.0) {
        std::fill(mask.a.begin(), mask.a.end(), 1.0);
        return mask;
    }
    if (rate >= 1.0) throw ConfigError("dropout rate must be below 1");
    const double scale = 1.0 / (1.0 - rate);
    for (double& m : mask.a) m = rng.uniform() < rate ? 0.0 : scale;
    return mask;
}

void apply_mask(Mat& m, const Mat& mask) {
    if (m.rows != mask.rows || m.cols != mask.cols)
        throw ValidationError("apply_mask: shape mismatch");
    for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] *= mask.a[i];
}

double cross_entropy(std::span<const double> p, std::size_t y) {
    if (y >= p.size()) throw ValidationError("cross_entropy: label out of range");
    return -std::log(std::max(p[y], kProbClamp));
}

void OptimizerState::init(const std::vector<std::size_t>& sizes) {
    step = 0;
    m.clear();
    v.clear();
    m.reserve(sizes.size());
    v.reserve(sizes.size());
    for (std::size_t n : sizes) {
        m.emplace_back(n, 0.0);
        v.emplace_back(n, 0.0);
    }
}

void adam_step(OptimizerState& state,
               const std::vector<std::span<double>>& params,
               const std::vector<std::span<const double>>& grads) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ConfigError("adam_step: tensor list mismatch");
    state.step += 1;
    if (state.kind == OptimizerKind::Sgd) {
        for (std::size_t t = 0; t < params.size(); ++t) {
            auto p = params[t];
            auto g = grads[t];
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (!std::isfinite(g[i]))
                    throw DivergenceError("non-finite gradient", state.step);
                p[i] -= state.alpha * g[i];
            }
        }
        return;
    }
    const double bc1 =
        1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 =
        1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto p = params[t];
        auto g = grads[t];
        auto& mt = state.m[t];
        auto& vt = state.v[t];
        if (p.size() != g.size() || p.size() != mt.size())
            throw ConfigError("adam_step: tensor size mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i];
            if (!std::isfinite(gi))
                throw DivergenceError("non-finite gradient", state.step);
            mt[i] = state.beta1 * mt[i] + (1.0 - state.beta1) * gi;
            vt[i] = state.beta2 * vt[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = mt[i] / bc1;
            const double vhat = vt[i] / bc2;
            p[i] -= state.alpha * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

GradCheckReport finite_diff_check(
    const std::vector<std::span<double>>& params,
    const std::vector<std::span<const double>>& analytic,
    const std::function<double()>& loss, double h, double tolerance,
    std::size_t max_checked, std::uint64_t seed) {
    if (params.size() != analytic.size())
        throw ConfigError("finite_diff_check: tensor list mismatch");
    std::size_t total = 0;
    for (const auto& p : params) total += p.size();

    // Flat index -> (tensor, offset) pairs to probe.
    std::vector<std::pair<std::size_t, std::size_t>> picks;
    if (max_checked == 0 || total <= max_checked) {
        picks.reserve(total);
        for (std::size_t t = 0; t < params.size(); ++t)
            for (std::size_t i = 0; i < params[t].size(); ++i)
                picks.emplace_back(t, i);
    } else {
        Rng rng(derive_seed(seed, "gradcheck"));
        picks.reserve(max_checked);
        for (std::size_t k = 0; k < max_checked; ++k) {
            std::uint64_t flat = rng.bounded(total);
            std::size_t t = 0;
            while (flat >= params[t].size()) {
                flat -= params[t].size();
                ++t;
            }
            picks.emplace_back(t, static_cast<std::size_t>(flat));
        }
    }

    GradCheckReport report;
    report.checked = picks.size();
    report.pass = true;
    for (const auto& [t, i] : picks) {
        double& theta = params[t][i];
        const double saved = theta;
        theta = saved + h;
        const double up = loss();
        theta = saved - h;
        const double down = loss();
        theta = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[t][i];
        const double rel = std::abs(a - numeric) /
                           std::max({std::abs(a), std::abs(numeric), 1.0});
        if (rel > report.worst_rel_err) {
            report.worst_rel_err = rel;
            char buf[64];
            std::snprintf(buf, sizeof(buf), "tensor %zu entry %zu", t, i);
            report.worst_location = buf;
        }
        if (rel > tolerance) report.pass = false;
    }
    return report;
}

}  // namespace comfort
