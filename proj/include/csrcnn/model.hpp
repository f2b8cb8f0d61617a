#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "csrcnn/layers.hpp"
#include "csrcnn/rng.hpp"
#include "csrcnn/tensor.hpp"

namespace csrcnn {

// One FSRCNN stage: feature dimension d, shrink width s, mapping depth m,
// integer upscale factor u. Defaults are the FSRCNN-lineage setting.
struct StageConfig {
    int d = 56;
    int s = 12;
    int m = 4;
    int upscale = 2;
};

template <typename T>
struct Stage {
    StageConfig cfg;
    std::vector<LayerParams<T>> layers;
};

// Layer sequence Conv(5,d,1)-PReLU-Conv(1,s,d)-PReLU-[Conv(3,s,s)-PReLU]*m-
// Conv(1,d,s)-PReLU-DeConv(9,1,d). Convolutions keep spatial size
// (pad = k/2); the deconvolution multiplies it by exactly `upscale`
// (stride u, pad 4, out_pad u-1). Only the deconvolution carries the
// deconv learning-rate group.
template <typename T>
Stage<T> build_stage(const StageConfig& cfg, std::uint64_t seed) {
    if (cfg.d < 1 || cfg.s < 1 || cfg.m < 0) throw ConfigError("build_stage: d, s must be >= 1 and m >= 0");
    if (cfg.s > cfg.d) throw ConfigError("build_stage: shrink width s must not exceed d");
    if (cfg.upscale < 2) throw ConfigError("build_stage: upscale must be >= 2");

    Stage<T> st;
    st.cfg = cfg;
    auto& L = st.layers;
    L.push_back(LayerParams<T>::conv(1, cfg.d, 5, 2));
    L.push_back(LayerParams<T>::prelu(cfg.d));
    L.push_back(LayerParams<T>::conv(cfg.d, cfg.s, 1, 0));
    L.push_back(LayerParams<T>::prelu(cfg.s));
    for (int i = 0; i < cfg.m; ++i) {
        L.push_back(LayerParams<T>::conv(cfg.s, cfg.s, 3, 1));
        L.push_back(LayerParams<T>::prelu(cfg.s));
    }
    L.push_back(LayerParams<T>::conv(cfg.s, cfg.d, 1, 0));
    L.push_back(LayerParams<T>::prelu(cfg.d));
    L.push_back(LayerParams<T>::deconv(cfg.d, 1, 9, cfg.upscale, 4, cfg.upscale - 1));

    Rng rng(seed);
    for (auto& layer : L) msra_init(layer, rng);
    return st;
}

template <typename T>
Tensor<T> layer_forward(const Tensor<T>& x, const LayerParams<T>& p) {
    switch (p.kind) {
        case LayerKind::conv: return conv2d_forward(x, p);
        case LayerKind::deconv: return deconv2d_forward(x, p);
        case LayerKind::prelu: return prelu_forward(x, p);
    }
    throw ConfigError("layer_forward: unknown layer kind");
}

template <typename T>
Tensor<T> layer_backward(const Tensor<T>& x, LayerParams<T>& p, const Tensor<T>& grad_out) {
    switch (p.kind) {
        case LayerKind::conv: return conv2d_backward(x, p, grad_out);
        case LayerKind::deconv: return deconv2d_backward(x, p, grad_out);
        case LayerKind::prelu: return prelu_backward(x, p, grad_out);
    }
    throw ConfigError("layer_backward: unknown layer kind");
}

// Runs the stage; when `inputs` is given it receives the tensor fed to each
// layer, which stage_backward consumes.
template <typename T>
Tensor<T> stage_forward(const Stage<T>& st, const Tensor<T>& x, std::vector<Tensor<T>>* inputs = nullptr) {
    if (inputs) inputs->clear();
    Tensor<T> cur = x;
    for (const auto& layer : st.layers) {
        if (inputs) inputs->push_back(cur);
        cur = layer_forward(cur, layer);
    }
    return cur;
}

template <typename T>
Tensor<T> stage_backward(Stage<T>& st, const std::vector<Tensor<T>>& inputs, const Tensor<T>& grad_out) {
    Tensor<T> grad = grad_out;
    for (std::size_t i = st.layers.size(); i-- > 0;) grad = layer_backward(inputs[i], st.layers[i], grad);
    return grad;
}

// Ordered chain of stages; stage k maps ratio r_k to r_{k+1} with
// r_{k+1} = u_k * r_k. The default three-stage, u=2 cascade realizes
// r = (1/8, 1/4, 1/2, 1).
template <typename T>
struct CascadeModel {
    std::vector<Stage<T>> stages;

    int stage_count() const { return static_cast<int>(stages.size()); }

    // Product of all stage upscale factors (8 for the default cascade).
    int base_scale() const {
        int prod = 1;
        for (const auto& st : stages) prod *= st.cfg.upscale;
        return prod;
    }

    // Product of upscale factors from stage k to the end.
    int remaining_scale(int k) const {
        int prod = 1;
        for (int i = k; i < stage_count(); ++i) prod *= stages[i].cfg.upscale;
        return prod;
    }

    std::int64_t param_count() const {
        std::int64_t total = 0;
        for (const auto& st : stages)
            for (const auto& layer : st.layers) total += layer.param_count();
        return total;
    }

    template <typename U>
    CascadeModel<U> cast() const {
        CascadeModel<U> out;
        for (const auto& st : stages) {
            Stage<U> s2;
            s2.cfg = st.cfg;
            for (const auto& layer : st.layers) {
                LayerParams<U> l2;
                l2.kind = layer.kind;
                l2.lr_group = layer.lr_group;
                l2.in_c = layer.in_c;
                l2.out_c = layer.out_c;
                l2.k = layer.k;
                l2.stride = layer.stride;
                l2.pad = layer.pad;
                l2.out_pad = layer.out_pad;
                if (!layer.w.empty()) {
                    l2.w = layer.w.template cast<U>();
                    l2.w_grad = layer.w_grad.template cast<U>();
                    l2.w_vel = layer.w_vel.template cast<U>();
                }
                auto copy_vec = [](const std::vector<T>& src, std::vector<U>& dst) {
                    dst.resize(src.size());
                    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<U>(src[i]);
                };
                copy_vec(layer.b, l2.b);
                copy_vec(layer.b_grad, l2.b_grad);
                copy_vec(layer.b_vel, l2.b_vel);
                copy_vec(layer.a, l2.a);
                copy_vec(layer.a_grad, l2.a_grad);
                copy_vec(layer.a_vel, l2.a_vel);
                s2.layers.push_back(std::move(l2));
            }
            out.stages.push_back(std::move(s2));
        }
        return out;
    }
};

using CascadeModelF = CascadeModel<float>;
using CascadeModelD = CascadeModel<double>;

template <typename T>
CascadeModel<T> build_cascade(const std::vector<StageConfig>& cfgs, std::uint64_t seed) {
    if (cfgs.empty()) throw ConfigError("build_cascade: at least one stage required");
    CascadeModel<T> model;
    for (std::size_t k = 0; k < cfgs.size(); ++k) model.stages.push_back(build_stage<T>(cfgs[k], derive_seed(seed, k)));
    return model;
}

// K identical stages; the usual entry point (K=3 is the full cascade, K=1/2
// the Net1/Net2 ablations).
template <typename T>
CascadeModel<T> build_cascade(int stage_count, const StageConfig& cfg, std::uint64_t seed) {
    return build_cascade<T>(std::vector<StageConfig>(static_cast<std::size_t>(stage_count), cfg), seed);
}

template <typename T>
struct ForwardTrace {
    std::vector<std::vector<Tensor<T>>> layer_inputs; // per stage
    std::vector<Tensor<T>> outputs;                   // per stage
};

// Returns every stage output in order; one pass yields all K restoration
// scales at once.
template <typename T>
std::vector<Tensor<T>> cascade_forward(const CascadeModel<T>& model, const Tensor<T>& x,
                                       ForwardTrace<T>* trace = nullptr) {
    if (trace) {
        trace->layer_inputs.assign(model.stages.size(), {});
        trace->outputs.clear();
    }
    std::vector<Tensor<T>> outputs;
    Tensor<T> cur = x;
    for (std::size_t k = 0; k < model.stages.size(); ++k) {
        cur = stage_forward(model.stages[k], cur, trace ? &trace->layer_inputs[k] : nullptr);
        outputs.push_back(cur);
        if (trace) trace->outputs.push_back(cur);
    }
    return outputs;
}

// Mean absolute pixel difference, averaged over the batch.
template <typename T>
double stage_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    return mean_abs_diff(pred, target);
}

// Sum of the per-stage losses, accumulated in stage order; the pair carries
// the per-stage values for logging and ablation reports.
template <typename T>
std::pair<double, std::vector<double>> total_loss(const std::vector<Tensor<T>>& outputs,
                                                  const std::vector<Tensor<T>>& targets) {
    if (outputs.size() != targets.size())
        throw ShapeError("total_loss: " + std::to_string(outputs.size()) + " outputs vs " +
                         std::to_string(targets.size()) + " targets");
    std::vector<double> per_stage;
    double total = 0.0;
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        per_stage.push_back(stage_loss(outputs[k], targets[k]));
        total += per_stage.back();
    }
    return {total, per_stage};
}

// dL/dpred of the L1 stage loss: sign(pred - target) / element count, with
// the zero-difference subgradient taken as 0.
template <typename T>
Tensor<T> stage_loss_grad(const Tensor<T>& pred, const Tensor<T>& target) {
    if (!pred.same_shape(target))
        throw ShapeError("stage_loss_grad: shape (" + pred.shape_str() + ") vs (" + target.shape_str() + ")");
    Tensor<T> grad(pred.n(), pred.c(), pred.h(), pred.w());
    const T inv_len = T(1) / static_cast<T>(pred.size());
    for (std::int64_t i = 0; i < pred.size(); ++i) {
        const T d = pred[i] - target[i];
        grad[i] = d > T(0) ? inv_len : (d < T(0) ? -inv_len : T(0));
    }
    return grad;
}

// Backpropagates the summed per-stage L1 loss through the chain. The gradient
// entering stage k's output is the direct L_k term plus the contribution
// flowing back from stages k+1..K-1, since every intermediate output both
// feeds the next stage and forms its own sub-loss. `loss_mask` (tests only)
// drops individual L_k terms. Returns dL/dx.
template <typename T>
Tensor<T> cascade_backward(CascadeModel<T>& model, const Tensor<T>& x, const std::vector<Tensor<T>>& targets,
                           const ForwardTrace<T>* trace = nullptr, const std::vector<int>* loss_mask = nullptr) {
    const int K = model.stage_count();
    if (static_cast<int>(targets.size()) != K)
        throw ShapeError("cascade_backward: " + std::to_string(targets.size()) + " targets for " + std::to_string(K) +
                         " stages");
    ForwardTrace<T> local;
    if (!trace) {
        cascade_forward(model, x, &local);
        trace = &local;
    }
    Tensor<T> grad;
    for (int k = K - 1; k >= 0; --k) {
        const bool use_loss = !loss_mask || (*loss_mask)[k] != 0;
        if (use_loss) {
            Tensor<T> lg = stage_loss_grad(trace->outputs[k], targets[k]);
            if (grad.empty()) {
                grad = std::move(lg);
            } else {
                for (std::int64_t i = 0; i < grad.size(); ++i) grad[i] += lg[i];
            }
        } else if (grad.empty()) {
            grad = Tensor<T>(trace->outputs[k].n(), trace->outputs[k].c(), trace->outputs[k].h(),
                             trace->outputs[k].w());
        }
        grad = stage_backward(model.stages[k], trace->layer_inputs[k], grad);
    }
    return grad;
}

template <typename T>
void zero_grads(CascadeModel<T>& model) {
    for (auto& st : model.stages)
        for (auto& layer : st.layers) layer.zero_grads();
}

// One training pair: the low-resolution input patch plus the ladder of
// ground-truth targets, one per stage. Target k must be upscale(k-1) times
// the size of target k-1 and the last target is the HR patch itself.
struct TrainSample {
    Tensor<float> input;
    std::vector<Tensor<float>> targets;
};

} // namespace csrcnn
