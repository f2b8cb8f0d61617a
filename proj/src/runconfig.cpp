#include "csrcnn/runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace csrcnn {

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::string join_strings(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%g", v[i]);
        out += (i ? "," : "") + std::string(buf);
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

std::vector<std::string> parse_string_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<int> RunConfig::upscales() const {
    if (!stage_upscales.empty()) return stage_upscales;
    // Net1 reaches the x4 benchmark with one stride-4 stage; Net2 with 2x2;
    // the full cascade is 2x2x2.
    if (stages == 1) return {4};
    if (stages == 2) return {2, 2};
    return std::vector<int>(static_cast<std::size_t>(stages), 2);
}

void RunConfig::validate() const {
    if (stages < 1 || stages > 8) throw ConfigError("stages must lie in [1, 8]");
    if (stage_s > stage_d) throw ConfigError("stage.s must not exceed stage.d");
    if (stage_d < 1 || stage_s < 1 || stage_m < 0) throw ConfigError("stage.d, stage.s must be >= 1 and stage.m >= 0");
    const auto ups = upscales();
    if (static_cast<int>(ups.size()) != stages) throw ConfigError("stage.upscales must list one factor per stage");
    int base = 1;
    for (int u : ups) {
        if (u < 2) throw ConfigError("stage upscale factors must be >= 2");
        base *= u;
    }
    if (hr_patch < base || hr_patch % base != 0) throw ConfigError("hr_patch must be a positive multiple of the base scale");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (iters < 0 || finetune_iters < 0) throw ConfigError("iteration counts must be >= 0");
    if (lr_conv <= 0 || lr_deconv <= 0) throw ConfigError("base learning rates must be positive");
    if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
    if (log_interval < 1) throw ConfigError("log_interval must be >= 1");
    if (dataset_role != "train" && dataset_role != "test") throw ConfigError("dataset.role must be train or test");
    if (factor <= 1.0) throw ConfigError("factor must exceed 1");
    if (epsilon <= 0) throw ConfigError("epsilon must be positive");
    for (const std::string& m : methods)
        if (m != "bicubic" && m != "csrcnn" && m != "identity") throw ConfigError("unknown method '" + m + "'");
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out << "batch=" << batch << "\n";
    out << "checkpoint=" << checkpoint << "\n";
    out << "command=" << command << "\n";
    out << "data_root=" << data_root << "\n";
    out << "dataset.name=" << dataset_name << "\n";
    out << "dataset.role=" << dataset_role << "\n";
    out << "dataset.root=" << dataset_root << "\n";
    out << "emit_images=" << (emit_images ? 1 : 0) << "\n";
    out << "epsilon=" << fmt_double(epsilon) << "\n";
    out << "factor=" << fmt_double(factor) << "\n";
    out << "factors=" << join_doubles(factors) << "\n";
    out << "finetune_iters=" << finetune_iters << "\n";
    out << "finetune_manifest=" << finetune_manifest << "\n";
    out << "hr_h=" << hr_h << "\n";
    out << "hr_patch=" << hr_patch << "\n";
    out << "hr_w=" << hr_w << "\n";
    out << "input=" << input << "\n";
    out << "iters=" << iters << "\n";
    out << "log_interval=" << log_interval << "\n";
    out << "lr_conv=" << fmt_double(lr_conv) << "\n";
    out << "lr_deconv=" << fmt_double(lr_deconv) << "\n";
    out << "methods=" << join_strings(methods) << "\n";
    out << "momentum=" << fmt_double(momentum) << "\n";
    out << "out_dir=" << out_dir << "\n";
    out << "output=" << output << "\n";
    out << "perturb=" << (perturb ? 1 : 0) << "\n";
    out << "seed=" << seed << "\n";
    out << "stage.d=" << stage_d << "\n";
    out << "stage.m=" << stage_m << "\n";
    out << "stage.s=" << stage_s << "\n";
    out << "stage.upscales=" << join_ints(upscales()) << "\n";
    out << "stages=" << stages << "\n";
    out << "stride=" << stride << "\n";
    out << "test_manifests=" << join_strings(test_manifests) << "\n";
    out << "train_manifest=" << train_manifest << "\n";
    return out.str();
}

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
    if (key == "batch") batch = std::stoi(value);
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "command") command = value;
    else if (key == "data_root") data_root = value;
    else if (key == "dataset.name") dataset_name = value;
    else if (key == "dataset.role") dataset_role = value;
    else if (key == "dataset.root") dataset_root = value;
    else if (key == "emit_images") emit_images = value == "1" || value == "true";
    else if (key == "epsilon") epsilon = std::stod(value);
    else if (key == "factor") factor = std::stod(value);
    else if (key == "factors") factors = parse_double_list(value);
    else if (key == "finetune_iters") finetune_iters = std::stoll(value);
    else if (key == "finetune_manifest") finetune_manifest = value;
    else if (key == "hr_h") hr_h = std::stoi(value);
    else if (key == "hr_patch") hr_patch = std::stoi(value);
    else if (key == "hr_w") hr_w = std::stoi(value);
    else if (key == "input") input = value;
    else if (key == "iters") iters = std::stoll(value);
    else if (key == "log_interval") log_interval = std::stoi(value);
    else if (key == "lr_conv") lr_conv = std::stod(value);
    else if (key == "lr_deconv") lr_deconv = std::stod(value);
    else if (key == "methods") methods = parse_string_list(value);
    else if (key == "momentum") momentum = std::stod(value);
    else if (key == "out_dir") out_dir = value;
    else if (key == "output") output = value;
    else if (key == "perturb") perturb = value == "1" || value == "true";
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "stage.d") stage_d = std::stoi(value);
    else if (key == "stage.m") stage_m = std::stoi(value);
    else if (key == "stage.s") stage_s = std::stoi(value);
    else if (key == "stage.upscales") stage_upscales = parse_int_list(value);
    else if (key == "stages") stages = std::stoi(value);
    else if (key == "stride") stride = std::stoi(value);
    else if (key == "test_manifests") test_manifests = parse_string_list(value);
    else if (key == "train_manifest") train_manifest = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " is not key=value: " + line);
        apply_kv(line.substr(0, eq), line.substr(eq + 1));
    }
}

} // namespace csrcnn
