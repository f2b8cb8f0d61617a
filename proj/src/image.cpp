#include "csrcnn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace csrcnn {

namespace {

float luma601(float r, float g, float b) {
    return (65.481f * r + 128.553f * g + 24.966f * b) / 255.0f + 16.0f / 255.0f;
}

float quant8(float v) {
    v = std::clamp(v, 0.0f, 1.0f);
    return std::round(v * 255.0f) / 255.0f;
}

ImageY from_rgb8(const std::uint8_t* rgb, int h, int w, int channels, bool source_gray, const std::string& path) {
    ImageY img(h, w);
    img.provenance = path;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* px = rgb + (static_cast<std::size_t>(y) * w + x) * channels;
            float value;
            if (source_gray) {
                value = px[0] / 255.0f;
            } else {
                value = luma601(px[0] / 255.0f, px[1] / 255.0f, px[2] / 255.0f);
            }
            img.at(y, x) = quant8(value);
        }
    return img;
}

// --- BMP ---------------------------------------------------------------

std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

ImageY load_bmp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open image: " + path);
    std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (raw.size() < 54 || raw[0] != 'B' || raw[1] != 'M') throw IoError("not a BMP file: " + path);

    const std::uint32_t data_offset = le32(&raw[10]);
    const std::uint32_t header_size = le32(&raw[14]);
    if (header_size < 40) throw IoError("unsupported BMP header: " + path);
    const std::int32_t width = static_cast<std::int32_t>(le32(&raw[18]));
    std::int32_t height = static_cast<std::int32_t>(le32(&raw[22]));
    const bool top_down = height < 0;
    if (top_down) height = -height;
    const std::uint16_t bpp = le16(&raw[28]);
    const std::uint32_t compression = le32(&raw[30]);
    if (width < 1 || height < 1) throw IoError("invalid BMP dimensions: " + path);
    if (compression != 0) throw IoError("compressed BMP is not supported: " + path);
    if (bpp != 8 && bpp != 24 && bpp != 32) throw IoError("unsupported BMP bit depth: " + path);

    const std::uint8_t* palette = nullptr;
    std::uint32_t palette_size = 0;
    bool palette_gray = true;
    if (bpp == 8) {
        palette_size = le32(&raw[46]); // biClrUsed; 0 means the full table
        if (palette_size == 0 || palette_size > 256) palette_size = 256;
        const std::size_t palette_at = 14 + header_size;
        if (raw.size() < palette_at + palette_size * 4) throw IoError("truncated BMP palette: " + path);
        palette = &raw[palette_at];
        for (std::uint32_t i = 0; i < palette_size; ++i)
            if (palette[i * 4] != palette[i * 4 + 1] || palette[i * 4 + 1] != palette[i * 4 + 2]) palette_gray = false;
    }

    const std::size_t row_bytes = (static_cast<std::size_t>(width) * bpp / 8 + 3) & ~std::size_t(3);
    if (raw.size() < data_offset + row_bytes * static_cast<std::size_t>(height))
        throw IoError("truncated BMP pixel data: " + path);

    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3);
    for (int y = 0; y < height; ++y) {
        const int src_row = top_down ? y : height - 1 - y;
        const std::uint8_t* row = &raw[data_offset + row_bytes * static_cast<std::size_t>(src_row)];
        for (int x = 0; x < width; ++x) {
            std::uint8_t r, g, b;
            if (bpp == 8) {
                const std::uint8_t idx = row[x];
                if (idx >= palette_size) throw IoError("BMP pixel index outside the palette: " + path);
                b = palette[idx * 4];
                g = palette[idx * 4 + 1];
                r = palette[idx * 4 + 2];
            } else {
                const std::uint8_t* px = row + x * (bpp / 8);
                b = px[0];
                g = px[1];
                r = px[2];
            }
            std::uint8_t* dst = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
            dst[0] = r;
            dst[1] = g;
            dst[2] = b;
        }
    }
    const bool gray = bpp == 8 && palette_gray;
    return from_rgb8(rgb.data(), height, width, 3, gray, path);
}

void save_bmp_gray(const ImageY& img, const std::string& path) {
    const int h = img.h, w = img.w;
    const std::size_t row_bytes = (static_cast<std::size_t>(w) + 3) & ~std::size_t(3);
    const std::uint32_t data_offset = 14 + 40 + 256 * 4;
    const std::uint32_t file_size = data_offset + static_cast<std::uint32_t>(row_bytes * h);

    std::vector<std::uint8_t> out(file_size, 0);
    out[0] = 'B';
    out[1] = 'M';
    auto put32 = [&](std::size_t at, std::uint32_t v) {
        out[at] = v & 0xff;
        out[at + 1] = (v >> 8) & 0xff;
        out[at + 2] = (v >> 16) & 0xff;
        out[at + 3] = (v >> 24) & 0xff;
    };
    auto put16 = [&](std::size_t at, std::uint16_t v) {
        out[at] = v & 0xff;
        out[at + 1] = (v >> 8) & 0xff;
    };
    put32(2, file_size);
    put32(10, data_offset);
    put32(14, 40);
    put32(18, static_cast<std::uint32_t>(w));
    put32(22, static_cast<std::uint32_t>(h));
    put16(26, 1);
    put16(28, 8);
    put32(34, static_cast<std::uint32_t>(row_bytes * h));
    put32(46, 256);
    for (int i = 0; i < 256; ++i) {
        out[54 + i * 4] = static_cast<std::uint8_t>(i);
        out[54 + i * 4 + 1] = static_cast<std::uint8_t>(i);
        out[54 + i * 4 + 2] = static_cast<std::uint8_t>(i);
    }
    for (int y = 0; y < h; ++y) {
        std::uint8_t* row = &out[data_offset + row_bytes * static_cast<std::size_t>(h - 1 - y)];
        for (int x = 0; x < w; ++x)
            row[x] = static_cast<std::uint8_t>(std::lround(std::clamp(img.at(y, x), 0.0f, 1.0f) * 255.0f));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open image for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("failed writing image: " + path);
}

// --- PNG (libpng simplified API) ----------------------------------------

ImageY load_png(const std::string& path) {
    png_image im;
    std::memset(&im, 0, sizeof(im));
    im.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&im, path.c_str()))
        throw IoError("cannot read PNG: " + path + " (" + im.message + ")");
    const bool source_gray = (im.format & PNG_FORMAT_FLAG_COLOR) == 0;
    im.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(im));
    if (!png_image_finish_read(&im, nullptr, rgb.data(), 0, nullptr)) {
        std::string msg = im.message;
        png_image_free(&im);
        throw IoError("cannot decode PNG: " + path + " (" + msg + ")");
    }
    return from_rgb8(rgb.data(), static_cast<int>(im.height), static_cast<int>(im.width), 3, source_gray, path);
}

void save_png_gray(const ImageY& img, const std::string& path) {
    std::vector<std::uint8_t> gray(static_cast<std::size_t>(img.h) * img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            gray[static_cast<std::size_t>(y) * img.w + x] =
                static_cast<std::uint8_t>(std::lround(std::clamp(img.at(y, x), 0.0f, 1.0f) * 255.0f));
    png_image im;
    std::memset(&im, 0, sizeof(im));
    im.version = PNG_IMAGE_VERSION;
    im.width = static_cast<png_uint_32>(img.w);
    im.height = static_cast<png_uint_32>(img.h);
    im.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&im, path.c_str(), 0, gray.data(), 0, nullptr))
        throw IoError("cannot write PNG: " + path + " (" + im.message + ")");
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    std::string tail = s.substr(s.size() - suffix.size());
    std::transform(tail.begin(), tail.end(), tail.begin(), [](unsigned char c) { return std::tolower(c); });
    return tail == suffix;
}

} // namespace

ImageY load_image_y(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open image: " + path);
    char magic[8] = {};
    probe.read(magic, sizeof(magic));
    probe.close();
    if (magic[0] == 'B' && magic[1] == 'M') return load_bmp(path);
    const unsigned char png_sig[4] = {0x89, 'P', 'N', 'G'};
    if (std::memcmp(magic, png_sig, 4) == 0) return load_png(path);
    throw IoError("unsupported image format (need BMP or PNG): " + path);
}

void save_image_y(const ImageY& img, const std::string& path) {
    if (has_suffix(path, ".bmp")) {
        save_bmp_gray(img, path);
    } else if (has_suffix(path, ".png")) {
        save_png_gray(img, path);
    } else {
        throw ConfigError("save_image_y: unsupported extension (use .png or .bmp): " + path);
    }
}

ImageY crop_image(const ImageY& img, int top, int left, int h, int w) {
    if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > img.h || left + w > img.w)
        throw BoundsError("crop_image: window outside image");
    ImageY out(h, w);
    out.provenance = img.provenance;
    for (int y = 0; y < h; ++y)
        std::copy(&img.v[static_cast<std::size_t>(top + y) * img.w + left],
                  &img.v[static_cast<std::size_t>(top + y) * img.w + left + w], &out.v[static_cast<std::size_t>(y) * w]);
    return out;
}

ImageY rotate90(const ImageY& img, int quarter_turns) {
    const int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return img;
    ImageY out = (q == 2) ? ImageY(img.h, img.w) : ImageY(img.w, img.h);
    out.provenance = img.provenance;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            // counter-clockwise quarter turns
            if (q == 1)
                out.at(img.w - 1 - x, y) = img.at(y, x);
            else if (q == 2)
                out.at(img.h - 1 - y, img.w - 1 - x) = img.at(y, x);
            else
                out.at(x, img.h - 1 - y) = img.at(y, x);
        }
    return out;
}

ImageY quantize8(const ImageY& img) {
    ImageY out = img;
    for (auto& value : out.v) value = quant8(value);
    return out;
}

Tensor<float> image_to_tensor(const ImageY& img) {
    Tensor<float> t(1, 1, img.h, img.w);
    std::copy(img.v.begin(), img.v.end(), t.data());
    return t;
}

ImageY tensor_to_image(const Tensor<float>& t) {
    if (t.n() != 1 || t.c() != 1) throw ShapeError("tensor_to_image: expected shape (1,1,h,w), got (" + t.shape_str() + ")");
    ImageY img(t.h(), t.w());
    for (std::int64_t i = 0; i < t.size(); ++i) img.v[static_cast<std::size_t>(i)] = std::clamp(t[i], 0.0f, 1.0f);
    return img;
}

} // namespace csrcnn
