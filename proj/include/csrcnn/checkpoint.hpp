#pragma once

#include <string>

#include "csrcnn/model.hpp"
#include "csrcnn/training.hpp"

namespace csrcnn {

// Binary checkpoint container, little-endian throughout:
//   magic "CSRC", u32 version,
//   u32 stage count, per stage u32 {d, s, m, upscale},
//   u64 iteration counter, 4 x u64 rng state,
//   u32 tensor count, then per tensor: u32 name length, name bytes,
//   u8 dtype tag (0 = f32, 1 = f64), u8 rank, u32 dims, raw scalar data.
// save -> load -> save is byte-identical and restores training exactly
// (weights, momentum buffers, iteration counter and rng state all round-trip).

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoadedCheckpoint {
    CascadeModel<float> model;
    TrainState state;
};

void save_checkpoint(const CascadeModel<float>& model, const TrainState& state, const std::string& path);
LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace csrcnn
