#pragma once

#include <string>
#include <vector>

#include "csrcnn/image.hpp"
#include "csrcnn/model.hpp"
#include "csrcnn/training.hpp"

namespace csrcnn {

enum class DatasetRole { train, test };

struct DatasetSpec {
    std::string name;
    std::string root;
    DatasetRole role = DatasetRole::train;
};

struct PrepareParams {
    int hr_patch = 96;
    int stride = 48;
    std::vector<int> upscales = {2, 2, 2}; // per-stage factors; product is the base scale
};

// One augmentation variant of a source image, reproducible from the source
// path plus the transform tag.
struct PreparedImage {
    std::string source_path;
    std::string transform; // e.g. "s90_r270", or "center_crop t l h w" for test role
    ImageY image;
};

struct SampleRef {
    int image_index = 0;
    int top = 0;
    int left = 0;
};

// Output of the preparation pipeline. Train role: augmented variants plus the
// patch grid over them. Test role: center-cropped originals, no patches.
struct PreparedDataset {
    std::string name;
    DatasetRole role = DatasetRole::train;
    PrepareParams params;
    std::vector<PreparedImage> images;
    std::vector<SampleRef> refs;

    int base_scale() const {
        int prod = 1;
        for (int u : params.upscales) prod *= u;
        return prod;
    }

    TrainSample sample(const SampleRef& ref) const;
    SampleSource source() const;
};

// The source plus rotations by 90/180/270 degrees crossed with bicubic
// rescales by 1.0/0.9/0.8/0.7/0.6: 20 variants per image, scale-major order.
std::vector<ImageY> augment(const ImageY& img);

// Tiles hr_patch crops at the given stride and builds the LR input plus the
// target ladder, every level bicubic-downscaled from the HR crop directly.
// Images smaller than hr_patch yield an empty list.
std::vector<TrainSample> make_samples(const ImageY& img, int hr_patch, int stride, const std::vector<int>& upscales);

TrainSample cut_sample(const ImageY& img, int top, int left, int hr_patch, const std::vector<int>& upscales);

// Runs load -> augment -> patch grid (train role) or load -> center-crop to a
// multiple of the base scale (test role) over every BMP/PNG under spec.root,
// in sorted path order. Throws ConfigError on an empty dataset.
PreparedDataset prepare_dataset(const DatasetSpec& spec, const PrepareParams& params);

// Plain-text manifest: header, one `image` line per variant, one `sample`
// line per patch. Re-running preparation yields byte-identical text.
std::string format_manifest(const PreparedDataset& ds);
void write_manifest(const PreparedDataset& ds, const std::string& path);

// Rebuilds the dataset a manifest describes by re-loading the source images
// and re-applying the recorded transforms.
PreparedDataset load_manifest(const std::string& path);

} // namespace csrcnn
