#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "csrcnn/checkpoint.hpp"
#include "csrcnn/data.hpp"
#include "csrcnn/eval.hpp"
#include "csrcnn/gradcheck.hpp"
#include "csrcnn/resample.hpp"
#include "csrcnn/runconfig.hpp"
#include "csrcnn/training.hpp"

namespace fs = std::filesystem;
using namespace csrcnn;

namespace {

std::vector<StageConfig> stage_configs(const RunConfig& cfg) {
    std::vector<StageConfig> out;
    for (int u : cfg.upscales()) {
        StageConfig sc;
        sc.d = cfg.stage_d;
        sc.s = cfg.stage_s;
        sc.m = cfg.stage_m;
        sc.upscale = u;
        out.push_back(sc);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return {};
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

int cmd_prepare(const RunConfig& cfg) {
    DatasetSpec spec;
    spec.name = cfg.dataset_name.empty() ? fs::path(cfg.dataset_root).filename().string() : cfg.dataset_name;
    spec.root = cfg.dataset_root;
    if (spec.root.empty() && !cfg.data_root.empty() && !spec.name.empty())
        spec.root = (fs::path(cfg.data_root) / spec.name).string();
    if (spec.root.empty()) throw ConfigError("prepare: --root (or CSRCNN_DATA_ROOT plus --name) is required");
    spec.role = cfg.dataset_role == "test" ? DatasetRole::test : DatasetRole::train;

    PrepareParams params;
    params.hr_patch = cfg.hr_patch;
    params.stride = cfg.stride;
    params.upscales = cfg.upscales();

    PreparedDataset ds = prepare_dataset(spec, params);
    fs::create_directories(cfg.out_dir);
    const std::string manifest_path = (fs::path(cfg.out_dir) / (spec.name + ".manifest")).string();
    const std::string text = format_manifest(ds);
    if (read_file(manifest_path) == text) {
        std::cout << "manifest unchanged (cache hit): " << manifest_path << "\n";
    } else {
        std::ofstream f(manifest_path, std::ios::binary);
        if (!f) throw IoError("cannot write manifest: " + manifest_path);
        f << text;
    }
    std::cout << "dataset " << spec.name << ": " << ds.images.size() << " prepared images, " << ds.refs.size()
              << " training samples\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    if (cfg.train_manifest.empty()) throw ConfigError("train: --train-manifest is required");
    PreparedDataset scratch = load_manifest(cfg.train_manifest);
    if (scratch.refs.empty()) throw ConfigError("train: manifest holds no training samples");
    if (scratch.params.upscales != cfg.upscales())
        throw ShapeError("train: manifest upscales do not match the model's stage factors");

    CascadeModel<float> model = build_cascade<float>(stage_configs(cfg), cfg.seed);

    TrainConfig tc;
    tc.iters = cfg.iters;
    tc.lr_conv = cfg.lr_conv;
    tc.lr_deconv = cfg.lr_deconv;
    tc.momentum = cfg.momentum;
    tc.batch = cfg.batch;
    tc.seed = cfg.seed;
    tc.log_interval = cfg.log_interval;

    std::vector<TrainRecord> records;
    TrainState state;
    if (!cfg.finetune_manifest.empty() && cfg.finetune_iters > 0) {
        PreparedDataset extra = load_manifest(cfg.finetune_manifest);
        if (extra.params.upscales != cfg.upscales())
            throw ShapeError("train: fine-tune manifest upscales do not match the model's stage factors");
        SampleSource a = scratch.source();
        SampleSource b = extra.source();
        records = two_phase_train(model, a, b, tc, cfg.finetune_iters, &state);
    } else {
        state.rng = Rng(cfg.seed);
        SampleSource a = scratch.source();
        records = train(model, a, tc, state);
    }

    fs::create_directories(cfg.out_dir);
    const std::string ckpt = cfg.checkpoint.empty() ? (fs::path(cfg.out_dir) / "checkpoint.csrc").string() : cfg.checkpoint;
    save_checkpoint(model, state, ckpt);
    const std::string history = (fs::path(cfg.out_dir) / "history.txt").string();
    write_history(records, cfg.log_interval, history);
    std::cout << "trained " << records.size() << " iterations over " << model.stage_count() << " stage(s)\n";
    if (!records.empty()) {
        std::cout << "final loss " << records.back().total << " (per stage:";
        for (double v : records.back().per_stage) std::cout << " " << v;
        std::cout << ")\n";
    }
    std::cout << "checkpoint: " << ckpt << "\nhistory: " << history << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    if (cfg.test_manifests.empty()) throw ConfigError("eval: --test-manifests is required");
    const bool needs_model =
        std::find(cfg.methods.begin(), cfg.methods.end(), "csrcnn") != cfg.methods.end();
    CascadeModel<float> model;
    if (needs_model) {
        if (cfg.checkpoint.empty()) throw ConfigError("eval: --checkpoint is required for method 'csrcnn'");
        model = load_checkpoint(cfg.checkpoint).model;
    }

    std::vector<PreparedDataset> datasets;
    for (const std::string& m : cfg.test_manifests) datasets.push_back(load_manifest(m));

    fs::create_directories(cfg.out_dir);
    BenchmarkOptions opts;
    opts.emit_images = cfg.emit_images;
    opts.out_dir = cfg.out_dir;
    EvalReport report = benchmark(needs_model ? &model : nullptr, datasets, cfg.factors, cfg.methods, opts);

    const std::string text = format_report_text(report);
    std::cout << text;
    std::ofstream(fs::path(cfg.out_dir) / "report.txt") << text;
    std::ofstream(fs::path(cfg.out_dir) / "report.tsv") << format_report_tsv(report);
    std::cout << "report: " << (fs::path(cfg.out_dir) / "report.txt").string() << "\n";
    return 0;
}

int cmd_sr(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ConfigError("sr: --input is required");
    if (cfg.checkpoint.empty()) throw ConfigError("sr: --checkpoint is required");
    if (!fs::exists(cfg.checkpoint)) throw IoError("sr: checkpoint not found: " + cfg.checkpoint);
    CascadeModel<float> model = load_checkpoint(cfg.checkpoint).model;
    ImageY lr = load_image_y(cfg.input);

    const int hr_h = cfg.hr_h > 0 ? cfg.hr_h : static_cast<int>(std::lround(lr.h * cfg.factor));
    const int hr_w = cfg.hr_w > 0 ? cfg.hr_w : static_cast<int>(std::lround(lr.w * cfg.factor));
    const int entry = route_entry_stage(model, cfg.factor);
    const int remaining = model.remaining_scale(entry);
    std::cout << "factor " << cfg.factor << ": entering stage " << entry << " (remaining upscale x" << remaining
              << ")\n";
    if (static_cast<double>(remaining) != cfg.factor)
        std::cout << "bicubic pre-resize to 1/" << remaining << " of the HR size applied before the entry stage\n";

    ImageY sr = route_and_superresolve(model, lr, cfg.factor, hr_h, hr_w);
    fs::create_directories(cfg.out_dir);
    std::string out = cfg.output;
    if (out.empty()) {
        char tag[32];
        std::snprintf(tag, sizeof(tag), "_x%g.png", cfg.factor);
        out = (fs::path(cfg.out_dir) / (fs::path(cfg.input).stem().string() + tag)).string();
    }
    save_image_y(sr, out);
    std::cout << "wrote " << out << " (" << sr.w << "x" << sr.h << ")\n";
    return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
    const double threshold = 1e-4;
    const auto results = run_gradcheck_suite(cfg.epsilon, cfg.perturb ? 0.5 : 0.0);
    bool ok = true;
    for (const auto& r : results) {
        const bool pass = r.max_rel_err < threshold;
        ok = ok && pass;
        std::printf("%-10s max rel err %.3e  %s\n", r.name.c_str(), r.max_rel_err, pass ? "ok" : "FAIL");
    }
    std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << " (threshold " << threshold << ")\n";
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    if (const char* env_root = std::getenv("CSRCNN_DATA_ROOT")) cfg.data_root = env_root;

    // --config is honored before the regular parse so flags override the file.
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        try {
            if (arg == "--config" && i + 1 < argc)
                cfg.load_file(argv[i + 1]);
            else if (arg.rfind("--config=", 0) == 0)
                cfg.load_file(arg.substr(9));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }

    CLI::App app{"cascaded FSRCNN super-resolution pipeline"};
    app.require_subcommand(1);
    app.fallthrough(); // common flags may follow the subcommand name
    bool print_config = false;
    std::string config_path, hr_shape;

    app.add_option("--config", config_path, "key=value config file (flags win)");
    app.add_flag("--print-config", print_config, "echo the canonical configuration and exit");
    app.add_option("--seed", cfg.seed, "deterministic seed");
    app.add_option("--out-dir", cfg.out_dir, "output directory");
    app.add_option("--data-root", cfg.data_root, "default dataset root (env CSRCNN_DATA_ROOT)");
    app.add_option("--stages", cfg.stages, "cascade depth: 1, 2 or 3 (Net1/Net2/Net3)");
    app.add_option("--stage-d", cfg.stage_d, "feature dimension d");
    app.add_option("--stage-s", cfg.stage_s, "shrink width s");
    app.add_option("--stage-m", cfg.stage_m, "mapping depth m");

    auto* prepare = app.add_subcommand("prepare", "build a dataset manifest");
    prepare->add_option("--name", cfg.dataset_name, "dataset name");
    prepare->add_option("--root", cfg.dataset_root, "directory of BMP/PNG images");
    prepare->add_option("--role", cfg.dataset_role, "train or test");
    prepare->add_option("--hr-patch", cfg.hr_patch, "HR patch size");
    prepare->add_option("--stride", cfg.stride, "patch stride");

    auto* train_cmd = app.add_subcommand("train", "train the cascade");
    train_cmd->add_option("--train-manifest", cfg.train_manifest, "scratch-phase manifest");
    train_cmd->add_option("--finetune-manifest", cfg.finetune_manifest, "fine-tune dataset manifest");
    train_cmd->add_option("--iters", cfg.iters, "phase-1 iterations (n in the schedule)");
    train_cmd->add_option("--finetune-iters", cfg.finetune_iters, "phase-2 iterations");
    train_cmd->add_option("--batch", cfg.batch, "batch size");
    train_cmd->add_option("--lr-conv", cfg.lr_conv, "conv-group base learning rate");
    train_cmd->add_option("--lr-deconv", cfg.lr_deconv, "deconv-group base learning rate");
    train_cmd->add_option("--momentum", cfg.momentum, "SGD momentum");
    train_cmd->add_option("--log-interval", cfg.log_interval, "history row interval");
    train_cmd->add_option("--checkpoint", cfg.checkpoint, "checkpoint output path");

    auto* eval_cmd = app.add_subcommand("eval", "run the PSNR/SSIM benchmark");
    eval_cmd->add_option("--checkpoint", cfg.checkpoint, "trained checkpoint");
    eval_cmd->add_option("--test-manifests", cfg.test_manifests, "test-role manifests")->delimiter(',');
    eval_cmd->add_option("--factors", cfg.factors, "scale factors")->delimiter(',');
    eval_cmd->add_option("--methods", cfg.methods, "bicubic, csrcnn, identity")->delimiter(',');
    eval_cmd->add_flag("--emit-images", cfg.emit_images, "write one PNG per (image, factor, method)");

    auto* sr_cmd = app.add_subcommand("sr", "super-resolve one image");
    sr_cmd->add_option("--checkpoint", cfg.checkpoint, "trained checkpoint");
    sr_cmd->add_option("--input", cfg.input, "LR input image");
    sr_cmd->add_option("--output", cfg.output, "output PNG path");
    sr_cmd->add_option("--factor", cfg.factor, "upscale factor");
    sr_cmd->add_option("--hr-shape", hr_shape, "target shape HxW (default factor * input)");

    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference verification suite");
    gc_cmd->add_option("--epsilon", cfg.epsilon, "central-difference step");
    gc_cmd->add_flag("--perturb", cfg.perturb, "test hook: corrupt one gradient, must fail");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) cfg.command = "prepare";
        if (train_cmd->parsed()) cfg.command = "train";
        if (eval_cmd->parsed()) cfg.command = "eval";
        if (sr_cmd->parsed()) cfg.command = "sr";
        if (gc_cmd->parsed()) cfg.command = "gradcheck";

        if (!hr_shape.empty()) {
            const auto x = hr_shape.find('x');
            if (x == std::string::npos) throw ConfigError("--hr-shape must look like 128x96");
            cfg.hr_h = std::stoi(hr_shape.substr(0, x));
            cfg.hr_w = std::stoi(hr_shape.substr(x + 1));
        }

        cfg.validate();
        if (print_config) {
            std::cout << cfg.to_text();
            return 0;
        }

        if (cfg.command == "prepare") return cmd_prepare(cfg);
        if (cfg.command == "train") return cmd_train(cfg);
        if (cfg.command == "eval") return cmd_eval(cfg);
        if (cfg.command == "sr") return cmd_sr(cfg);
        if (cfg.command == "gradcheck") return cmd_gradcheck(cfg);
        throw ConfigError("no command given");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
