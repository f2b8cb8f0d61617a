#include "csrcnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csrcnn/resample.hpp"

namespace fs = std::filesystem;

namespace csrcnn {

namespace {

const int kScalePercents[] = {100, 90, 80, 70, 60};
const int kRotations[] = {0, 90, 180, 270};

ImageY apply_variant(const ImageY& src, int scale_pct, int rotation) {
    ImageY out = src;
    if (scale_pct != 100) {
        const int sh = std::max(1, static_cast<int>(std::lround(src.h * scale_pct / 100.0)));
        const int sw = std::max(1, static_cast<int>(std::lround(src.w * scale_pct / 100.0)));
        out = bicubic_resample(out, sh, sw);
    }
    out = rotate90(out, rotation / 90);
    out.provenance = src.provenance + "#s" + std::to_string(scale_pct) + "_r" + std::to_string(rotation);
    return out;
}

std::string variant_tag(int scale_pct, int rotation) {
    return "s" + std::to_string(scale_pct) + "_r" + std::to_string(rotation);
}

bool parse_variant_tag(const std::string& tag, int& scale_pct, int& rotation) {
    if (tag.size() < 4 || tag[0] != 's') return false;
    const auto sep = tag.find("_r");
    if (sep == std::string::npos) return false;
    scale_pct = std::stoi(tag.substr(1, sep - 1));
    rotation = std::stoi(tag.substr(sep + 2));
    return true;
}

std::vector<std::string> list_raster_files(const std::string& root) {
    if (!fs::exists(root) || !fs::is_directory(root)) throw ConfigError("dataset root does not exist: " + root);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".bmp" || ext == ".png") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

} // namespace

std::vector<ImageY> augment(const ImageY& img) {
    std::vector<ImageY> variants;
    variants.reserve(20);
    for (int scale_pct : kScalePercents)
        for (int rotation : kRotations) variants.push_back(apply_variant(img, scale_pct, rotation));
    return variants;
}

TrainSample cut_sample(const ImageY& img, int top, int left, int hr_patch, const std::vector<int>& upscales) {
    const ImageY hr = crop_image(img, top, left, hr_patch, hr_patch);
    int base = 1;
    for (int u : upscales) base *= u;
    if (hr_patch % base != 0) throw ConfigError("cut_sample: hr_patch must be divisible by the base scale");

    TrainSample s;
    s.input = image_to_tensor(bicubic_resample(hr, hr_patch / base, hr_patch / base));
    int ratio_den = base;
    for (int u : upscales) {
        ratio_den /= u;
        const int size = hr_patch / std::max(1, ratio_den);
        s.targets.push_back(ratio_den == 1 ? image_to_tensor(hr) : image_to_tensor(bicubic_resample(hr, size, size)));
    }
    return s;
}

std::vector<TrainSample> make_samples(const ImageY& img, int hr_patch, int stride, const std::vector<int>& upscales) {
    if (stride < 1) throw ConfigError("make_samples: stride must be >= 1");
    int base = 1;
    for (int u : upscales) base *= u;
    if (base < 2 || hr_patch % base != 0) throw ConfigError("make_samples: hr_patch must be divisible by the base scale");

    std::vector<TrainSample> samples;
    if (img.h < hr_patch || img.w < hr_patch) return samples;
    for (int top = 0; top + hr_patch <= img.h; top += stride)
        for (int left = 0; left + hr_patch <= img.w; left += stride)
            samples.push_back(cut_sample(img, top, left, hr_patch, upscales));
    return samples;
}

TrainSample PreparedDataset::sample(const SampleRef& ref) const {
    return cut_sample(images[static_cast<std::size_t>(ref.image_index)].image, ref.top, ref.left, params.hr_patch,
                      params.upscales);
}

SampleSource PreparedDataset::source() const {
    return SampleSource{
        [this]() { return refs.size(); },
        [this](std::size_t i) { return sample(refs[i]); },
    };
}

PreparedDataset prepare_dataset(const DatasetSpec& spec, const PrepareParams& params) {
    PreparedDataset ds;
    ds.name = spec.name;
    ds.role = spec.role;
    ds.params = params;

    const std::vector<std::string> paths = list_raster_files(spec.root);
    if (paths.empty()) throw ConfigError("empty dataset: no BMP/PNG images under " + spec.root);
    for (const std::string& p : paths)
        if (p.find_first_of(" \t") != std::string::npos)
            throw ConfigError("image paths with whitespace cannot be recorded in a manifest: " + p);

    const int base = ds.base_scale();
    for (const std::string& path : paths) {
        const ImageY img = load_image_y(path);
        if (spec.role == DatasetRole::test) {
            // Crop so the model's output geometry is integral; centered.
            const int ch = (img.h / base) * base;
            const int cw = (img.w / base) * base;
            if (ch < base || cw < base) continue;
            const int top = (img.h - ch) / 2;
            const int left = (img.w - cw) / 2;
            PreparedImage pi;
            pi.source_path = path;
            pi.transform = "center_crop " + std::to_string(top) + " " + std::to_string(left) + " " +
                           std::to_string(ch) + " " + std::to_string(cw);
            pi.image = crop_image(img, top, left, ch, cw);
            ds.images.push_back(std::move(pi));
            continue;
        }
        for (int scale_pct : kScalePercents)
            for (int rotation : kRotations) {
                PreparedImage pi;
                pi.source_path = path;
                pi.transform = variant_tag(scale_pct, rotation);
                pi.image = apply_variant(img, scale_pct, rotation);
                const int image_index = static_cast<int>(ds.images.size());
                for (int top = 0; top + params.hr_patch <= pi.image.h; top += params.stride)
                    for (int left = 0; left + params.hr_patch <= pi.image.w; left += params.stride)
                        ds.refs.push_back(SampleRef{image_index, top, left});
                ds.images.push_back(std::move(pi));
            }
    }
    if (spec.role == DatasetRole::test && ds.images.empty())
        throw ConfigError("empty dataset: every image under " + spec.root + " is smaller than the base scale");
    return ds;
}

std::string format_manifest(const PreparedDataset& ds) {
    std::ostringstream out;
    out << "# csrcnn manifest v1\n";
    out << "dataset " << ds.name << "\n";
    out << "role " << (ds.role == DatasetRole::train ? "train" : "test") << "\n";
    out << "hr_patch " << ds.params.hr_patch << "\n";
    out << "stride " << ds.params.stride << "\n";
    out << "upscales ";
    for (std::size_t i = 0; i < ds.params.upscales.size(); ++i)
        out << (i ? "," : "") << ds.params.upscales[i];
    out << "\n";
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        const PreparedImage& pi = ds.images[i];
        out << "image " << i << " " << pi.source_path << " " << pi.transform << " " << pi.image.h << " " << pi.image.w
            << "\n";
    }
    for (const SampleRef& ref : ds.refs)
        out << "sample " << ref.image_index << " " << ref.top << " " << ref.left << "\n";
    return out.str();
}

void write_manifest(const PreparedDataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open manifest for writing: " + path);
    f << format_manifest(ds);
    if (!f) throw IoError("failed writing manifest: " + path);
}

PreparedDataset load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path);
    PreparedDataset ds;
    std::string line;
    if (!std::getline(f, line) || line != "# csrcnn manifest v1")
        throw FormatError("not a csrcnn manifest (bad header line): " + path);

    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "dataset") {
            ls >> ds.name;
        } else if (key == "role") {
            std::string role;
            ls >> role;
            ds.role = role == "test" ? DatasetRole::test : DatasetRole::train;
        } else if (key == "hr_patch") {
            ls >> ds.params.hr_patch;
        } else if (key == "stride") {
            ls >> ds.params.stride;
        } else if (key == "upscales") {
            std::string list;
            ls >> list;
            ds.params.upscales.clear();
            std::istringstream us(list);
            std::string item;
            while (std::getline(us, item, ',')) ds.params.upscales.push_back(std::stoi(item));
        } else if (key == "image") {
            int idx;
            PreparedImage pi;
            ls >> idx >> pi.source_path >> pi.transform;
            const ImageY src = load_image_y(pi.source_path);
            if (pi.transform == "center_crop") {
                int top, left, h, w;
                ls >> top >> left >> h >> w;
                pi.transform += " " + std::to_string(top) + " " + std::to_string(left) + " " + std::to_string(h) +
                                " " + std::to_string(w);
                pi.image = crop_image(src, top, left, h, w);
            } else {
                int scale_pct, rotation;
                if (!parse_variant_tag(pi.transform, scale_pct, rotation))
                    throw FormatError("bad transform tag '" + pi.transform + "' in manifest: " + path);
                pi.image = apply_variant(src, scale_pct, rotation);
            }
            ds.images.push_back(std::move(pi));
        } else if (key == "sample") {
            SampleRef ref;
            ls >> ref.image_index >> ref.top >> ref.left;
            if (ref.image_index < 0 || ref.image_index >= static_cast<int>(ds.images.size()))
                throw FormatError("sample line references missing image in manifest: " + path);
            ds.refs.push_back(ref);
        } else if (!key.empty() && key[0] == '#') {
            continue;
        } else {
            throw FormatError("unknown manifest line '" + key + "': " + path);
        }
    }
    return ds;
}

} // namespace csrcnn
