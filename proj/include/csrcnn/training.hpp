#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "csrcnn/model.hpp"
#include "csrcnn/rng.hpp"

namespace csrcnn {

// Dynamic learning-rate schedule a_m = a_0 * 0.1^floor(m / (0.8*n)). The
// exponent is evaluated in integer arithmetic ((10*m) / (8*n)) so boundary
// iterations land exactly where the formula says.
inline double lr_at(double a0, std::int64_t m, std::int64_t n) {
    if (n <= 0) throw ConfigError("lr_at: total iteration count must be positive");
    if (m < 0) throw ConfigError("lr_at: iteration must be non-negative");
    const std::int64_t exponent = (10 * m) / (8 * n);
    double lr = a0;
    for (std::int64_t i = 0; i < exponent; ++i) lr *= 0.1;
    return lr;
}

struct TrainConfig {
    std::int64_t iters = 0;    // n in the schedule
    double lr_conv = 1e-3;     // a_0 for every layer except the deconvolutions
    double lr_deconv = 1e-4;   // a_0 for the deconvolution group
    double momentum = 0.9;
    int batch = 16;
    std::uint64_t seed = 0;
    int log_interval = 1;      // row interval for the history file
};

// Mutable loop state, persisted in checkpoints so a run can resume
// bit-exactly: iteration counter plus the sample-draw generator.
struct TrainState {
    std::int64_t iter = 0;
    Rng rng{0};
};

struct TrainRecord {
    int phase = 1;
    std::int64_t iter = 0; // phase-local iteration
    double total = 0.0;
    std::vector<double> per_stage;
    double lr_conv = 0.0;
    double lr_deconv = 0.0;
};

// SGD with momentum: v <- momentum*v - lr*grad; theta <- theta + v, with the
// group rate from lr_at. Gradient buffers are cleared afterwards.
void sgd_step(CascadeModel<float>& model, const TrainConfig& cfg, std::int64_t iter);

// Indexable source of training samples; keeps the loop independent of whether
// samples live in memory or are cut from prepared images on demand.
struct SampleSource {
    std::function<std::size_t()> size;
    std::function<TrainSample(std::size_t)> get;

    static SampleSource from_vector(const std::vector<TrainSample>& samples);
};

// Runs forward / summed L1 loss / backward / sgd_step from state.iter up to
// cfg.iters. Deterministic given (seed-derived state, config, source).
// Returns one record per iteration executed. `stop_iter`, when non-negative,
// pauses the loop early without touching the schedule's n = cfg.iters, so a
// paused-and-resumed run is identical to an uninterrupted one.
std::vector<TrainRecord> train(CascadeModel<float>& model, const SampleSource& source, const TrainConfig& cfg,
                               TrainState& state, std::int64_t stop_iter = -1);

// Seeds a fresh state from cfg.seed and trains from iteration zero.
std::vector<TrainRecord> train(CascadeModel<float>& model, const SampleSource& source, const TrainConfig& cfg);

// Phase 1 trains on the scratch set for cfg.iters; phase 2 fine-tunes on the
// union of both sets for finetune_iters with both base rates halved and the
// schedule restarted against the phase-2 iteration budget. `final_state`,
// when given, receives the state of the last phase run for checkpointing.
std::vector<TrainRecord> two_phase_train(CascadeModel<float>& model, const SampleSource& scratch_set,
                                         const SampleSource& finetune_extra, const TrainConfig& cfg,
                                         std::int64_t finetune_iters, TrainState* final_state = nullptr);

SampleSource concat_sources(const SampleSource& a, const SampleSource& b);

// Plain-text history table: phase, iteration, total loss, per-stage losses,
// conv and deconv learning rates; one row per log_interval iterations (the
// final row of each phase is always written).
std::string format_history(const std::vector<TrainRecord>& records, int log_interval);
void write_history(const std::vector<TrainRecord>& records, int log_interval, const std::string& path);

} // namespace csrcnn
