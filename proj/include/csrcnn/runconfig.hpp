#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csrcnn/errors.hpp"

namespace csrcnn {

// Flat configuration for the command-line tool. Every accepted configuration
// reprints canonically via to_text() and re-parses to the same value; unknown
// keys are rejected. Values come from an optional key=value config file,
// overridden by command-line flags.
struct RunConfig {
    std::string command;

    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string data_root; // defaults from CSRCNN_DATA_ROOT

    // model
    int stages = 3;
    int stage_d = 56;
    int stage_s = 12;
    int stage_m = 4;
    std::vector<int> stage_upscales; // empty: derived from `stages`

    // training
    std::int64_t iters = 10000;
    std::int64_t finetune_iters = 0;
    int batch = 16;
    double momentum = 0.9;
    double lr_conv = 1e-3;
    double lr_deconv = 1e-4;
    int log_interval = 100;

    // data preparation
    std::string dataset_name;
    std::string dataset_root;
    std::string dataset_role = "train";
    int hr_patch = 96;
    int stride = 48;

    // manifests / artifacts
    std::string train_manifest;
    std::string finetune_manifest;
    std::vector<std::string> test_manifests;
    std::string checkpoint;

    // eval
    std::vector<double> factors = {2, 3, 4};
    std::vector<std::string> methods = {"bicubic", "csrcnn"};
    bool emit_images = false;

    // sr
    std::string input;
    std::string output;
    double factor = 2.0;
    int hr_h = 0; // 0: inferred as factor * LR size
    int hr_w = 0;

    // gradcheck
    double epsilon = 1e-4;
    bool perturb = false; // test hook: corrupts one backward pass on purpose

    std::vector<int> upscales() const;
    void validate() const;

    // canonical key=value form, one per line, fixed key order
    std::string to_text() const;
    void apply_kv(const std::string& key, const std::string& value);
    void load_file(const std::string& path);
};

std::vector<double> parse_double_list(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);
std::vector<std::string> parse_string_list(const std::string& s);

} // namespace csrcnn
