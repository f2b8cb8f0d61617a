#include "csrcnn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace csrcnn {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'R', 'C'};

class Writer {
public:
    explicit Writer(const std::string& path) : f_(path, std::ios::binary) {
        if (!f_) throw IoError("cannot open checkpoint for writing: " + path);
    }

    void bytes(const void* p, std::size_t len) { f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(len)); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }

    void finish(const std::string& path) {
        f_.flush();
        if (!f_) throw IoError("failed writing checkpoint: " + path);
    }

private:
    std::ofstream f_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
        if (!f_) throw IoError("cannot open checkpoint: " + path);
    }

    void bytes(void* p, std::size_t len) {
        f_.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
        if (f_.gcount() != static_cast<std::streamsize>(len))
            throw FormatError("checkpoint truncated at offset " + std::to_string(offset_ + f_.gcount()) + ": " + path_);
        offset_ += len;
    }

    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }

    std::size_t offset() const { return offset_; }

private:
    std::string path_;
    std::ifstream f_;
    std::size_t offset_ = 0;
};

struct NamedTensor {
    std::string name;
    const float* data;
    std::vector<std::uint32_t> dims;
};

// Fixed name scheme: s<k>.l<i>.{w,b,a,w_vel,b_vel,a_vel}; the load path
// requires exactly the tensors the stage configs imply.
template <typename Fn>
void visit_tensors(const CascadeModel<float>& model, Fn&& fn) {
    for (std::size_t k = 0; k < model.stages.size(); ++k)
        for (std::size_t i = 0; i < model.stages[k].layers.size(); ++i) {
            const auto& L = model.stages[k].layers[i];
            const std::string prefix = "s" + std::to_string(k) + ".l" + std::to_string(i) + ".";
            if (!L.w.empty()) {
                std::vector<std::uint32_t> d4 = {static_cast<std::uint32_t>(L.w.n()), static_cast<std::uint32_t>(L.w.c()),
                                                 static_cast<std::uint32_t>(L.w.h()), static_cast<std::uint32_t>(L.w.w())};
                fn(NamedTensor{prefix + "w", L.w.data(), d4});
                fn(NamedTensor{prefix + "w_vel", L.w_vel.data(), d4});
            }
            if (!L.b.empty()) {
                std::vector<std::uint32_t> d1 = {static_cast<std::uint32_t>(L.b.size())};
                fn(NamedTensor{prefix + "b", L.b.data(), d1});
                fn(NamedTensor{prefix + "b_vel", L.b_vel.data(), d1});
            }
            if (!L.a.empty()) {
                std::vector<std::uint32_t> d1 = {static_cast<std::uint32_t>(L.a.size())};
                fn(NamedTensor{prefix + "a", L.a.data(), d1});
                fn(NamedTensor{prefix + "a_vel", L.a_vel.data(), d1});
            }
        }
}

} // namespace

void save_checkpoint(const CascadeModel<float>& model, const TrainState& state, const std::string& path) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(model.stages.size()));
    for (const auto& st : model.stages) {
        w.u32(static_cast<std::uint32_t>(st.cfg.d));
        w.u32(static_cast<std::uint32_t>(st.cfg.s));
        w.u32(static_cast<std::uint32_t>(st.cfg.m));
        w.u32(static_cast<std::uint32_t>(st.cfg.upscale));
    }
    w.u64(static_cast<std::uint64_t>(state.iter));
    for (std::uint64_t word : state.rng.state()) w.u64(word);

    std::uint32_t count = 0;
    visit_tensors(model, [&](const NamedTensor&) { ++count; });
    w.u32(count);
    visit_tensors(model, [&](const NamedTensor& t) {
        w.u32(static_cast<std::uint32_t>(t.name.size()));
        w.bytes(t.name.data(), t.name.size());
        w.u8(0); // f32
        w.u8(static_cast<std::uint8_t>(t.dims.size()));
        std::uint64_t len = 1;
        for (std::uint32_t d : t.dims) {
            w.u32(d);
            len *= d;
        }
        w.bytes(t.data, len * sizeof(float));
    });
    w.finish(path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a checkpoint file (bad magic): " + path);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + "): " + path);

    const std::uint32_t stage_count = r.u32();
    if (stage_count == 0 || stage_count > 64) throw FormatError("implausible stage count in checkpoint: " + path);
    std::vector<StageConfig> cfgs;
    for (std::uint32_t k = 0; k < stage_count; ++k) {
        StageConfig cfg;
        cfg.d = static_cast<int>(r.u32());
        cfg.s = static_cast<int>(r.u32());
        cfg.m = static_cast<int>(r.u32());
        cfg.upscale = static_cast<int>(r.u32());
        cfgs.push_back(cfg);
    }

    LoadedCheckpoint out;
    out.state.iter = static_cast<std::int64_t>(r.u64());
    std::array<std::uint64_t, 4> rng_state;
    for (auto& word : rng_state) word = r.u64();
    out.state.rng.set_state(rng_state);

    out.model = build_cascade<float>(cfgs, 0);

    const std::uint32_t tensor_count = r.u32();
    std::uint32_t expected = 0;
    visit_tensors(out.model, [&](const NamedTensor&) { ++expected; });
    if (tensor_count != expected)
        throw FormatError("checkpoint holds " + std::to_string(tensor_count) + " tensors, model needs " +
                          std::to_string(expected) + ": " + path);

    // Records must appear in the canonical visit order with matching shapes.
    std::vector<NamedTensor> slots;
    visit_tensors(out.model, [&](const NamedTensor& t) { slots.push_back(t); });
    for (const NamedTensor& slot : slots) {
        const std::uint32_t name_len = r.u32();
        if (name_len > 256) throw FormatError("implausible tensor name length at offset " + std::to_string(r.offset()) + ": " + path);
        std::string name(name_len, '\0');
        r.bytes(name.data(), name_len);
        if (name != slot.name) throw FormatError("unexpected tensor record '" + name + "' (wanted '" + slot.name + "'): " + path);
        const std::uint8_t dtype = r.u8();
        if (dtype != 0) throw FormatError("tensor '" + name + "' has unsupported dtype tag: " + path);
        const std::uint8_t rank = r.u8();
        if (rank != slot.dims.size()) throw FormatError("tensor '" + name + "' has wrong rank: " + path);
        std::uint64_t len = 1;
        for (std::uint8_t i = 0; i < rank; ++i) {
            const std::uint32_t dim = r.u32();
            if (dim != slot.dims[i]) throw FormatError("tensor '" + name + "' has wrong shape: " + path);
            len *= dim;
        }
        r.bytes(const_cast<float*>(slot.data), len * sizeof(float));
    }
    return out;
}

} // namespace csrcnn
