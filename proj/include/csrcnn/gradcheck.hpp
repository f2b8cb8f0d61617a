#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "csrcnn/model.hpp"

namespace csrcnn {

// Central finite-difference gradient verification. Double precision only;
// relative error uses denominator max(|analytic|, |numeric|, 1e-8).
struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst; // which scalar produced the maximum
};

namespace detail {

inline void track_rel_err(GradCheckResult& r, double analytic, double numeric, const std::string& tag) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > r.max_rel_err) {
        r.max_rel_err = rel;
        r.worst = tag;
    }
}

// Perturbs each scalar reachable through `values`, recomputes `loss`, and
// compares the central difference against `analytic[i]`.
inline void check_scalars(GradCheckResult& r, const std::vector<double*>& values,
                          const std::vector<double>& analytic, const std::function<double()>& loss, double eps,
                          const std::string& tag) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        double* v = values[i];
        const double saved = *v;
        *v = saved + eps;
        const double lp = loss();
        *v = saved - eps;
        const double lm = loss();
        *v = saved;
        const double numeric = (lp - lm) / (2.0 * eps);
        track_rel_err(r, analytic[i], numeric, tag + "[" + std::to_string(i) + "]");
    }
}

inline void collect_layer_scalars(LayerParams<double>& p, std::vector<double*>& values) {
    for (std::int64_t i = 0; i < p.w.size(); ++i) values.push_back(&p.w[i]);
    for (auto& v : p.b) values.push_back(&v);
    for (auto& v : p.a) values.push_back(&v);
}

inline void collect_layer_grads(const LayerParams<double>& p, std::vector<double>& grads) {
    for (std::int64_t i = 0; i < p.w_grad.size(); ++i) grads.push_back(p.w_grad[i]);
    for (const auto& v : p.b_grad) grads.push_back(v);
    for (const auto& v : p.a_grad) grads.push_back(v);
}

} // namespace detail

// Checks one layer's backward pass against central differences of the scalar
// loss sum(coeffs * forward(x)). Covers weights, biases, slopes and the
// input.
inline GradCheckResult gradcheck_layer(LayerParams<double>& p, Tensor<double> x, const Tensor<double>& coeffs,
                                       double eps = 1e-4) {
    auto forward = [&]() { return layer_forward(x, p); };
    auto loss = [&]() {
        const Tensor<double> out = forward();
        double acc = 0.0;
        for (std::int64_t i = 0; i < out.size(); ++i) acc += coeffs[i] * out[i];
        return acc;
    };

    p.zero_grads();
    Tensor<double> grad_in = layer_backward(x, p, coeffs);

    GradCheckResult r;
    std::vector<double*> values;
    detail::collect_layer_scalars(p, values);
    std::vector<double> analytic;
    detail::collect_layer_grads(p, analytic);
    detail::check_scalars(r, values, analytic, loss, eps, "param");

    std::vector<double*> xs;
    std::vector<double> xg;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        xs.push_back(&x[i]);
        xg.push_back(grad_in[i]);
    }
    detail::check_scalars(r, xs, xg, loss, eps, "input");
    return r;
}

// Checks the full cascade backward pass under the summed per-stage L1 loss.
// Caller is responsible for keeping PReLU inputs and the prediction/target
// differences away from the non-differentiable kinks (see margin helpers).
inline GradCheckResult gradcheck_cascade(CascadeModel<double>& model, Tensor<double> x,
                                         const std::vector<Tensor<double>>& targets, double eps = 1e-4) {
    auto loss = [&]() {
        const auto outputs = cascade_forward(model, x);
        return total_loss(outputs, targets).first;
    };

    zero_grads(model);
    ForwardTrace<double> trace;
    cascade_forward(model, x, &trace);
    Tensor<double> grad_x = cascade_backward(model, x, targets, &trace);

    GradCheckResult r;
    std::vector<double*> values;
    std::vector<double> analytic;
    for (auto& st : model.stages)
        for (auto& layer : st.layers) {
            detail::collect_layer_scalars(layer, values);
            detail::collect_layer_grads(layer, analytic);
        }
    detail::check_scalars(r, values, analytic, loss, eps, "param");

    std::vector<double*> xs;
    std::vector<double> xg;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        xs.push_back(&x[i]);
        xg.push_back(grad_x[i]);
    }
    detail::check_scalars(r, xs, xg, loss, eps, "input");
    return r;
}

// Smallest |pre-activation| seen at any PReLU input during a forward pass.
// Finite differencing the L1 cascade loss is only valid when this margin and
// the prediction/target gaps stay well above eps.
inline double prelu_input_margin(const CascadeModel<double>& model, const Tensor<double>& x) {
    double margin = std::numeric_limits<double>::infinity();
    Tensor<double> cur = x;
    for (const auto& st : model.stages)
        for (const auto& layer : st.layers) {
            Tensor<double> next = layer_forward(cur, layer);
            if (layer.kind == LayerKind::prelu)
                for (std::int64_t i = 0; i < cur.size(); ++i) margin = std::min(margin, std::abs(cur[i]));
            cur = std::move(next);
        }
    return margin;
}

inline double loss_diff_margin(const std::vector<Tensor<double>>& outputs, const std::vector<Tensor<double>>& targets) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < outputs.size(); ++k)
        for (std::int64_t i = 0; i < outputs[k].size(); ++i)
            margin = std::min(margin, std::abs(outputs[k][i] - targets[k][i]));
    return margin;
}

// A toy cascade plus an input/target set built so every kink of the
// piecewise-linear loss surface stays far from the evaluation point: weights
// are uniform with |w| <= 0.4/(k^2 * in_c) and channel biases alternate
// +/-0.5, which pins every PReLU pre-activation into +/-[0.1, 0.9]. An eps
// of 1e-4 cannot reach a kink from there, and the +/-0.5 channels exercise
// both PReLU branches. Targets are the actual outputs displaced by at least
// 0.05 per pixel, keeping the L1 kink clear too.
struct ToyCascadeCase {
    CascadeModel<double> model;
    Tensor<double> input;
    std::vector<Tensor<double>> targets;
};

inline ToyCascadeCase make_toy_cascade_case(int stage_count, const StageConfig& cfg, int in_h, int in_w,
                                            std::uint64_t seed) {
    ToyCascadeCase c;
    c.model = build_cascade<double>(stage_count, cfg, seed);
    Rng rng(derive_seed(seed, 0xF00D));
    for (auto& st : c.model.stages)
        for (auto& layer : st.layers) {
            if (layer.kind == LayerKind::prelu) {
                for (auto& a : layer.a) a = 0.1 + 0.8 * rng.uniform();
                continue;
            }
            const double bound = 0.4 / (static_cast<double>(layer.k) * layer.k * layer.in_c);
            for (std::int64_t i = 0; i < layer.w.size(); ++i) layer.w[i] = bound * (2.0 * rng.uniform() - 1.0);
            for (std::size_t ci = 0; ci < layer.b.size(); ++ci) layer.b[ci] = ci % 2 == 0 ? 0.5 : -0.5;
        }

    c.input = Tensor<double>(1, 1, in_h, in_w);
    for (std::int64_t i = 0; i < c.input.size(); ++i) c.input[i] = 0.15 + 0.7 * rng.uniform();

    const auto outputs = cascade_forward(c.model, c.input);
    for (const auto& out : outputs) {
        Tensor<double> t = out;
        for (std::int64_t i = 0; i < t.size(); ++i) {
            const double offset = 0.05 + 0.1 * rng.uniform();
            t[i] += (rng.uniform() < 0.5 ? -offset : offset);
        }
        c.targets.push_back(std::move(t));
    }
    return c;
}

struct GradCheckCase {
    std::string name;
    double max_rel_err = 0.0;
};

// The verification suite behind `csrcnn gradcheck` and the acceptance run:
// every layer kind plus the full toy cascade under the summed L1 loss, all in
// double precision. `inject_grad_error`, when non-zero, is added to one
// analytic weight gradient of the convolution case so tooling can prove the
// comparison actually detects a broken backward pass.
inline std::vector<GradCheckCase> run_gradcheck_suite(double eps = 1e-4, double inject_grad_error = 0.0) {
    std::vector<GradCheckCase> results;
    Rng rng(20240501);
    auto rand_fill = [&rng](Tensor<double>& t, double lo, double hi) {
        for (std::int64_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * rng.uniform();
    };

    {
        auto p = LayerParams<double>::conv(2, 3, 3, 1);
        msra_init(p, rng);
        Tensor<double> x(2, 2, 5, 5), coeffs(2, 3, 5, 5);
        rand_fill(x, -1.0, 1.0);
        rand_fill(coeffs, -1.0, 1.0);
        if (inject_grad_error != 0.0) {
            // corrupted-analytic path: recompute by hand so the error lands in
            // the gradient that the finite difference is checked against
            auto loss = [&]() {
                const Tensor<double> out = conv2d_forward(x, p, 1, 1);
                double acc = 0.0;
                for (std::int64_t i = 0; i < out.size(); ++i) acc += coeffs[i] * out[i];
                return acc;
            };
            p.zero_grads();
            conv2d_backward(x, p, coeffs, 1, 1);
            p.w_grad[0] += inject_grad_error;
            GradCheckResult r;
            std::vector<double*> values;
            detail::collect_layer_scalars(p, values);
            std::vector<double> analytic;
            detail::collect_layer_grads(p, analytic);
            detail::check_scalars(r, values, analytic, loss, eps, "conv");
            results.push_back({"conv2d", r.max_rel_err});
        } else {
            results.push_back({"conv2d", gradcheck_layer(p, x, coeffs, eps).max_rel_err});
        }
    }
    {
        auto p = LayerParams<double>::deconv(2, 1, 9, 2, 4, 1);
        msra_init(p, rng);
        Tensor<double> x(1, 2, 6, 6), coeffs(1, 1, 12, 12);
        rand_fill(x, -1.0, 1.0);
        rand_fill(coeffs, -1.0, 1.0);
        results.push_back({"deconv2d", gradcheck_layer(p, x, coeffs, eps).max_rel_err});
    }
    {
        auto p = LayerParams<double>::prelu(3);
        Rng prng(7);
        for (auto& s : p.a) s = 0.1 + 0.4 * prng.uniform();
        Tensor<double> x(2, 3, 4, 4), coeffs(2, 3, 4, 4);
        // inputs bounded away from the kink by 1e-2
        for (std::int64_t i = 0; i < x.size(); ++i) {
            const double mag = 0.01 + prng.uniform();
            x[i] = prng.uniform() < 0.5 ? -mag : mag;
        }
        rand_fill(coeffs, -1.0, 1.0);
        results.push_back({"prelu", gradcheck_layer(p, x, coeffs, eps).max_rel_err});
    }
    {
        StageConfig cfg;
        cfg.d = 4;
        cfg.s = 2;
        cfg.m = 1;
        cfg.upscale = 2;
        ToyCascadeCase stage = make_toy_cascade_case(1, cfg, 6, 6, 271828);
        results.push_back({"stage", gradcheck_cascade(stage.model, stage.input, stage.targets, eps).max_rel_err});

        ToyCascadeCase toy = make_toy_cascade_case(3, cfg, 6, 6, 314159);
        // Ten-fold step for the deep case: the loss is piecewise linear in
        // each scalar, so a larger step inside the kink-free window (margins
        // are ~0.1, window moves pre-activations by < 1e-3) adds no
        // truncation error and cuts the rounding noise that otherwise
        // swamps the smallest deep-weight gradients.
        results.push_back({"cascade", gradcheck_cascade(toy.model, toy.input, toy.targets, 10 * eps).max_rel_err});
    }
    return results;
}

} // namespace csrcnn
