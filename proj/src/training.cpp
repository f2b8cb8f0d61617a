#include "csrcnn/training.hpp"

#include <cstdio>
#include <fstream>

#include "csrcnn/errors.hpp"

namespace csrcnn {

namespace {

void sgd_update(std::int64_t len, float* value, float* grad, float* vel, float momentum, float lr) {
    for (std::int64_t i = 0; i < len; ++i) {
        vel[i] = momentum * vel[i] - lr * grad[i];
        value[i] += vel[i];
        grad[i] = 0.0f;
    }
}

} // namespace

void sgd_step(CascadeModel<float>& model, const TrainConfig& cfg, std::int64_t iter) {
    const float lr_conv = static_cast<float>(lr_at(cfg.lr_conv, iter, cfg.iters));
    const float lr_deconv = static_cast<float>(lr_at(cfg.lr_deconv, iter, cfg.iters));
    const float momentum = static_cast<float>(cfg.momentum);
    for (auto& st : model.stages)
        for (auto& layer : st.layers) {
            const float lr = layer.lr_group == LrGroup::deconv_group ? lr_deconv : lr_conv;
            if (!layer.w.empty()) sgd_update(layer.w.size(), layer.w.data(), layer.w_grad.data(), layer.w_vel.data(), momentum, lr);
            if (!layer.b.empty())
                sgd_update(static_cast<std::int64_t>(layer.b.size()), layer.b.data(), layer.b_grad.data(),
                           layer.b_vel.data(), momentum, lr);
            if (!layer.a.empty())
                sgd_update(static_cast<std::int64_t>(layer.a.size()), layer.a.data(), layer.a_grad.data(),
                           layer.a_vel.data(), momentum, lr);
        }
}

SampleSource SampleSource::from_vector(const std::vector<TrainSample>& samples) {
    return SampleSource{
        [&samples]() { return samples.size(); },
        [&samples](std::size_t i) { return samples[i]; },
    };
}

SampleSource concat_sources(const SampleSource& a, const SampleSource& b) {
    return SampleSource{
        [&a, &b]() { return a.size() + b.size(); },
        [&a, &b](std::size_t i) { return i < a.size() ? a.get(i) : b.get(i - a.size()); },
    };
}

namespace {

// Stacks `batch` randomly drawn samples along the batch axis. Throws
// ShapeError if any sample disagrees with the first one's geometry.
void assemble_batch(const SampleSource& source, Rng& rng, int batch, int stage_count, Tensor<float>& input,
                    std::vector<Tensor<float>>& targets) {
    const std::size_t count = source.size();
    if (count == 0) throw ConfigError("train: sample source is empty");
    std::vector<std::size_t> picks(static_cast<std::size_t>(batch));
    for (auto& p : picks) p = static_cast<std::size_t>(rng.below(count));

    TrainSample first = source.get(picks[0]);
    if (static_cast<int>(first.targets.size()) != stage_count)
        throw ShapeError("train: sample has " + std::to_string(first.targets.size()) + " targets for a " +
                         std::to_string(stage_count) + "-stage model");
    input = Tensor<float>(batch, first.input.c(), first.input.h(), first.input.w());
    targets.clear();
    for (const auto& t : first.targets) targets.emplace_back(batch, t.c(), t.h(), t.w());

    for (int bi = 0; bi < batch; ++bi) {
        TrainSample s = bi == 0 ? std::move(first) : source.get(picks[static_cast<std::size_t>(bi)]);
        if (s.input.n() != 1 || s.input.c() != input.c() || s.input.h() != input.h() || s.input.w() != input.w())
            throw ShapeError("train: sample input geometry varies across the set");
        std::copy(s.input.data(), s.input.data() + s.input.size(), input.data() + input.offset(bi, 0, 0, 0));
        for (std::size_t k = 0; k < targets.size(); ++k) {
            if (s.targets[k].size() != targets[k].size() / batch)
                throw ShapeError("train: sample target geometry varies across the set");
            std::copy(s.targets[k].data(), s.targets[k].data() + s.targets[k].size(),
                      targets[k].data() + targets[k].offset(bi, 0, 0, 0));
        }
    }
}

std::vector<TrainRecord> run_phase(CascadeModel<float>& model, const SampleSource& source, const TrainConfig& cfg,
                                   TrainState& state, int phase, std::int64_t stop_iter = -1) {
    std::vector<TrainRecord> records;
    if (cfg.iters <= 0) return records;
    if (cfg.batch < 1) throw ConfigError("train: batch size must be >= 1");
    const std::int64_t until = stop_iter < 0 ? cfg.iters : std::min(stop_iter, cfg.iters);

    Tensor<float> input;
    std::vector<Tensor<float>> targets;
    for (; state.iter < until; ++state.iter) {
        assemble_batch(source, state.rng, cfg.batch, model.stage_count(), input, targets);

        ForwardTrace<float> trace;
        cascade_forward(model, input, &trace);
        auto [total, per_stage] = total_loss(trace.outputs, targets);
        cascade_backward(model, input, targets, &trace);
        sgd_step(model, cfg, state.iter);

        TrainRecord rec;
        rec.phase = phase;
        rec.iter = state.iter;
        rec.total = total;
        rec.per_stage = std::move(per_stage);
        rec.lr_conv = lr_at(cfg.lr_conv, state.iter, cfg.iters);
        rec.lr_deconv = lr_at(cfg.lr_deconv, state.iter, cfg.iters);
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace

std::vector<TrainRecord> train(CascadeModel<float>& model, const SampleSource& source, const TrainConfig& cfg,
                               TrainState& state, std::int64_t stop_iter) {
    return run_phase(model, source, cfg, state, 1, stop_iter);
}

std::vector<TrainRecord> train(CascadeModel<float>& model, const SampleSource& source, const TrainConfig& cfg) {
    TrainState state;
    state.rng = Rng(cfg.seed);
    return train(model, source, cfg, state);
}

std::vector<TrainRecord> two_phase_train(CascadeModel<float>& model, const SampleSource& scratch_set,
                                         const SampleSource& finetune_extra, const TrainConfig& cfg,
                                         std::int64_t finetune_iters, TrainState* final_state) {
    TrainState state;
    state.rng = Rng(cfg.seed);
    std::vector<TrainRecord> records = run_phase(model, scratch_set, cfg, state, 1);
    if (final_state) *final_state = state;
    if (finetune_iters <= 0) return records;

    TrainConfig fine = cfg;
    fine.iters = finetune_iters;
    fine.lr_conv = cfg.lr_conv * 0.5;
    fine.lr_deconv = cfg.lr_deconv * 0.5;
    TrainState fine_state;
    fine_state.rng = Rng(derive_seed(cfg.seed, 0x66696e65)); // independent fine-tune stream
    SampleSource both = concat_sources(scratch_set, finetune_extra);
    std::vector<TrainRecord> fine_records = run_phase(model, both, fine, fine_state, 2);
    records.insert(records.end(), fine_records.begin(), fine_records.end());
    if (final_state) *final_state = fine_state;
    return records;
}

std::string format_history(const std::vector<TrainRecord>& records, int log_interval) {
    if (log_interval < 1) log_interval = 1;
    std::string out = "# phase iter total";
    const std::size_t stages = records.empty() ? 0 : records.front().per_stage.size();
    for (std::size_t k = 0; k < stages; ++k) out += " l" + std::to_string(k);
    out += " lr_conv lr_deconv\n";
    char buf[64];
    for (std::size_t i = 0; i < records.size(); ++i) {
        const TrainRecord& r = records[i];
        const bool phase_end = i + 1 == records.size() || records[i + 1].phase != r.phase;
        if (r.iter % log_interval != 0 && !phase_end) continue;
        out += std::to_string(r.phase) + " " + std::to_string(r.iter);
        std::snprintf(buf, sizeof(buf), " %.9g", r.total);
        out += buf;
        for (double v : r.per_stage) {
            std::snprintf(buf, sizeof(buf), " %.9g", v);
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), " %.9g %.9g", r.lr_conv, r.lr_deconv);
        out += buf;
        out += "\n";
    }
    return out;
}

void write_history(const std::vector<TrainRecord>& records, int log_interval, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open history file for writing: " + path);
    f << format_history(records, log_interval);
    if (!f) throw IoError("failed writing history file: " + path);
}

} // namespace csrcnn
