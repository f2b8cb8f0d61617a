// Process-level checks of the csrcnn binary: exit codes, config echo, and a
// miniature prepare -> train -> eval -> sr pipeline on synthetic images.
// Usage: csrcnn_cli_tests <path-to-csrcnn-binary>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "csrcnn/image.hpp"
#include "csrcnn/rng.hpp"
#include "csrcnn/runconfig.hpp"

namespace fs = std::filesystem;
using namespace csrcnn;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (ok) {
        std::cout << "ok: " << what << "\n";
    } else {
        ++failures;
        std::cout << "FAIL: " << what << "\n";
    }
}

struct Invocation {
    int exit_code = -1;
    std::string output;
};

Invocation run(const std::string& cmd) {
    const std::string out_file = fs::temp_directory_path() / ("csrcnn_cli_out_" + std::to_string(::getpid()));
    const int rc = std::system((cmd + " > " + out_file + " 2>&1").c_str());
    Invocation inv;
    inv.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream f(out_file);
    inv.output = std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    fs::remove(out_file);
    return inv;
}

ImageY synthetic(int h, int w, std::uint64_t seed) {
    ImageY img(h, w);
    Rng rng(seed);
    const double fy = 0.2 + 0.3 * rng.uniform(), fx = 0.2 + 0.3 * rng.uniform();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = 0.5 + 0.3 * std::sin(fy * y) + 0.2 * std::cos(fx * x + 1.0);
            if ((y / 8 + x / 8) % 2 == 0) v += 0.15;
            img.at(y, x) = static_cast<float>(std::min(1.0, std::max(0.0, v)));
        }
    return img;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: csrcnn_cli_tests <csrcnn binary>\n";
        return 2;
    }
    const std::string bin = argv[1];
    const fs::path work = fs::temp_directory_path() / ("csrcnn_cli_" + std::to_string(::getpid()));
    fs::create_directories(work / "imgs");
    fs::create_directories(work / "empty");

    for (int i = 0; i < 2; ++i) save_image_y(synthetic(48, 48, 7 + i), (work / "imgs" / ("im" + std::to_string(i) + ".png")).string());

    // gradcheck passes on a fresh build, fails when a gradient is corrupted
    {
        Invocation inv = run(bin + " gradcheck");
        check(inv.exit_code == 0, "gradcheck exits 0");
        check(inv.output.find("max rel err") != std::string::npos, "gradcheck prints per-kind errors");

        Invocation bad = run(bin + " gradcheck --perturb");
        check(bad.exit_code == 1, "gradcheck --perturb exits 1");
    }

    // --print-config output re-parses to the identical configuration
    {
        Invocation inv = run(bin + " --print-config --seed 9 --stages 2 gradcheck");
        check(inv.exit_code == 0, "--print-config exits 0");
        RunConfig cfg;
        std::istringstream ss(inv.output);
        std::string line;
        bool parsed = true;
        while (std::getline(ss, line)) {
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                parsed = false;
                break;
            }
            try {
                cfg.apply_kv(line.substr(0, eq), line.substr(eq + 1));
            } catch (const std::exception&) {
                parsed = false;
                break;
            }
        }
        check(parsed, "--print-config output parses as key=value config");
        check(cfg.to_text() == inv.output, "config echo round-trips canonically");
        check(cfg.seed == 9 && cfg.stages == 2, "flags land in the echoed config");
    }

    // unknown config keys are rejected
    {
        std::ofstream((work / "bad.cfg").string()) << "no_such_key=1\n";
        Invocation inv = run(bin + " --config " + (work / "bad.cfg").string() + " gradcheck");
        check(inv.exit_code == 2, "unknown config key exits 2");
    }

    // prepare on an empty directory: exit 2, message names the problem
    {
        Invocation inv = run(bin + " prepare --root " + (work / "empty").string() + " --name void --out-dir " +
                             (work / "prep").string());
        check(inv.exit_code == 2, "prepare on empty dir exits 2");
        check(inv.output.find("empty dataset") != std::string::npos, "prepare names the empty dataset");
    }

    const std::string common = " --stage-d 4 --stage-s 2 --stage-m 1";
    const std::string prep_dir = (work / "prep").string();

    // CSRCNN_DATA_ROOT supplies the default dataset root
    {
        Invocation inv = run("CSRCNN_DATA_ROOT=" + work.string() + " " + bin +
                             " prepare --name imgs --role test --out-dir " + (work / "prep_env").string());
        check(inv.exit_code == 0, "prepare resolves the root from CSRCNN_DATA_ROOT");
    }

    // prepare (train + test roles), second run reports the cache hit
    {
        Invocation inv = run(bin + " prepare --root " + (work / "imgs").string() + " --name mini --role train" +
                             " --hr-patch 24 --stride 24 --out-dir " + prep_dir);
        check(inv.exit_code == 0, "prepare train role succeeds");
        Invocation again = run(bin + " prepare --root " + (work / "imgs").string() + " --name mini --role train" +
                               " --hr-patch 24 --stride 24 --out-dir " + prep_dir);
        check(again.output.find("cache hit") != std::string::npos, "second prepare reports a cache hit");

        Invocation test_role = run(bin + " prepare --root " + (work / "imgs").string() + " --name minitest --role test" +
                                   " --out-dir " + prep_dir);
        check(test_role.exit_code == 0, "prepare test role succeeds");
    }

    // train twice with the same seed: byte-identical checkpoints
    {
        const std::string cmd = bin + common + " --seed 3 train --train-manifest " + prep_dir +
                                "/mini.manifest --iters 8 --batch 2 --log-interval 1 --checkpoint ";
        Invocation a = run(cmd + (work / "a.csrc").string() + " --out-dir " + (work / "run_a").string());
        Invocation b = run(cmd + (work / "b.csrc").string() + " --out-dir " + (work / "run_b").string());
        check(a.exit_code == 0 && b.exit_code == 0, "train runs succeed");
        std::ifstream fa((work / "a.csrc").string(), std::ios::binary);
        std::ifstream fb((work / "b.csrc").string(), std::ios::binary);
        const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
        const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
        check(!ba.empty() && ba == bb, "same seed gives byte-identical checkpoints");
        check(a.output.find("3 stage(s)") != std::string::npos, "train reports the stage count");

        // history has one loss column per stage
        std::ifstream hist((work / "run_a" / "history.txt").string());
        std::string header;
        std::getline(hist, header);
        check(header.find("l0") != std::string::npos && header.find("l2") != std::string::npos,
              "history has three per-stage columns for --stages 3");
    }

    // eval: bicubic-only runs with no checkpoint; full grid with the model
    {
        Invocation inv = run(bin + " eval --test-manifests " + prep_dir + "/minitest.manifest --factors 2" +
                             " --methods bicubic --out-dir " + (work / "eval_b").string());
        check(inv.exit_code == 0, "eval with --methods bicubic runs without a checkpoint");

        Invocation full = run(bin + common + " eval --checkpoint " + (work / "a.csrc").string() +
                              " --test-manifests " + prep_dir + "/minitest.manifest --factors 2,4" +
                              " --methods bicubic,csrcnn,identity --emit-images --out-dir " + (work / "eval_f").string());
        check(full.exit_code == 0, "full eval grid succeeds");
        check(fs::exists(work / "eval_f" / "report.tsv"), "eval writes the delimited report");
        int pngs = 0;
        if (fs::exists(work / "eval_f"))
            for (const auto& e : fs::directory_iterator(work / "eval_f"))
                if (e.path().extension() == ".png") ++pngs;
        check(pngs == 2 * 2 * 3, "--emit-images writes one PNG per (image, factor, method)");
    }

    // sr: geometry, factor-3 pre-resize log, missing checkpoint
    {
        save_image_y(synthetic(16, 16, 77), (work / "lr.png").string());
        Invocation inv = run(bin + common + " sr --checkpoint " + (work / "a.csrc").string() + " --input " +
                             (work / "lr.png").string() + " --factor 8 --output " + (work / "sr8.png").string());
        check(inv.exit_code == 0, "sr factor 8 succeeds");
        ImageY sr = load_image_y((work / "sr8.png").string());
        check(sr.h == 128 && sr.w == 128, "factor 8 on 16x16 gives 128x128");

        Invocation f3 = run(bin + common + " sr --checkpoint " + (work / "a.csrc").string() + " --input " +
                            (work / "lr.png").string() + " --factor 3 --output " + (work / "sr3.png").string());
        check(f3.exit_code == 0, "sr factor 3 succeeds");
        check(f3.output.find("pre-resize") != std::string::npos, "sr factor 3 logs the pre-resize protocol");

        Invocation missing = run(bin + common + " sr --checkpoint " + (work / "nope.csrc").string() + " --input " +
                                 (work / "lr.png").string() + " --factor 2");
        check(missing.exit_code != 0, "missing checkpoint exits nonzero");
        check(missing.output.find("nope.csrc") != std::string::npos, "missing checkpoint names the path");
    }

    fs::remove_all(work);
    std::cout << (failures == 0 ? "all CLI checks passed\n" : "CLI checks FAILED\n");
    return failures == 0 ? 0 : 1;
}
