#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "csrcnn/checkpoint.hpp"
#include "csrcnn/data.hpp"
#include "csrcnn/eval.hpp"
#include "csrcnn/gradcheck.hpp"
#include "csrcnn/metrics.hpp"
#include "csrcnn/resample.hpp"
#include "csrcnn/training.hpp"

namespace py = pybind11;
using namespace csrcnn;

namespace {

ImageY array_to_image(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw ShapeError("expected a 2-D (h, w) array");
    ImageY img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), img.v.data());
    return img;
}

py::array_t<float> image_to_array(const ImageY& img) {
    py::array_t<float> arr({img.h, img.w});
    std::copy(img.v.begin(), img.v.end(), arr.mutable_data());
    return arr;
}

// Python-facing cascade handle: build, run, route, persist.
class PyCascade {
public:
    PyCascade(int stages, int d, int s, int m, const std::vector<int>& upscales, std::uint64_t seed) {
        std::vector<StageConfig> cfgs;
        for (int k = 0; k < stages; ++k) {
            StageConfig cfg;
            cfg.d = d;
            cfg.s = s;
            cfg.m = m;
            cfg.upscale = upscales.empty() ? 2 : upscales[static_cast<std::size_t>(k) % upscales.size()];
            cfgs.push_back(cfg);
        }
        model_ = build_cascade<float>(cfgs, seed);
    }

    explicit PyCascade(CascadeModel<float> model) : model_(std::move(model)) {}

    std::vector<py::array_t<float>> forward(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) const {
        const ImageY img = array_to_image(arr);
        auto outputs = cascade_forward(model_, image_to_tensor(img));
        std::vector<py::array_t<float>> out;
        for (auto& t : outputs) {
            py::array_t<float> a({t.h(), t.w()});
            std::copy(t.data(), t.data() + t.size(), a.mutable_data());
            out.push_back(std::move(a));
        }
        return out;
    }

    py::array_t<float> superresolve(const py::array_t<float, py::array::c_style | py::array::forcecast>& lr,
                                    double factor, int hr_h, int hr_w) const {
        return image_to_array(route_and_superresolve(model_, array_to_image(lr), factor, hr_h, hr_w));
    }

    int stage_count() const { return model_.stage_count(); }
    int base_scale() const { return model_.base_scale(); }
    std::int64_t param_count() const { return model_.param_count(); }

    void save(const std::string& path) const { save_checkpoint(model_, TrainState{}, path); }

    static PyCascade load(const std::string& path) { return PyCascade(load_checkpoint(path).model); }

private:
    CascadeModel<float> model_;
};

} // namespace

PYBIND11_MODULE(_csrcnn, m) {
    m.doc() = "cascaded FSRCNN super-resolution core";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<BoundsError>(m, "BoundsError", PyExc_IndexError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    m.def("lr_at", &lr_at, py::arg("a0"), py::arg("m"), py::arg("n"),
          "dynamic schedule a0 * 0.1^floor(m / (0.8 n))");

    m.def(
        "bicubic_resample",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img, int out_h, int out_w) {
            return image_to_array(bicubic_resample(array_to_image(img), out_h, out_w));
        },
        py::arg("image"), py::arg("out_h"), py::arg("out_w"));

    m.def(
        "psnr",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& b, int crop_border) {
            return psnr(array_to_image(a), array_to_image(b), crop_border);
        },
        py::arg("a"), py::arg("b"), py::arg("crop_border") = 0);

    m.def(
        "ssim",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& b, int crop_border) {
            return ssim(array_to_image(a), array_to_image(b), crop_border);
        },
        py::arg("a"), py::arg("b"), py::arg("crop_border") = 0);

    m.def(
        "load_image_y", [](const std::string& path) { return image_to_array(load_image_y(path)); }, py::arg("path"),
        "read a BMP/PNG raster as a luminance plane in [0, 1]");

    m.def(
        "save_image_y",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img, const std::string& path) {
            save_image_y(array_to_image(img), path);
        },
        py::arg("image"), py::arg("path"));

    m.def(
        "gradcheck", [](double eps) {
            py::list out;
            for (const auto& r : run_gradcheck_suite(eps)) out.append(py::make_tuple(r.name, r.max_rel_err));
            return out;
        },
        py::arg("eps") = 1e-4, "finite-difference verification suite; returns (name, max_rel_err) pairs");

    py::class_<PyCascade>(m, "Cascade")
        .def(py::init<int, int, int, int, const std::vector<int>&, std::uint64_t>(), py::arg("stages") = 3,
             py::arg("d") = 56, py::arg("s") = 12, py::arg("m") = 4, py::arg("upscales") = std::vector<int>{},
             py::arg("seed") = 0)
        .def("forward", &PyCascade::forward, py::arg("image"),
             "run all stages on an (h, w) plane; returns one array per stage")
        .def("superresolve", &PyCascade::superresolve, py::arg("lr"), py::arg("factor"), py::arg("hr_h"),
             py::arg("hr_w"), "scale-routed inference to the requested HR shape")
        .def("save", &PyCascade::save, py::arg("path"))
        .def_static("load", &PyCascade::load, py::arg("path"))
        .def_property_readonly("stage_count", &PyCascade::stage_count)
        .def_property_readonly("base_scale", &PyCascade::base_scale)
        .def_property_readonly("param_count", &PyCascade::param_count);

    m.attr("__version__") = "0.1.0";
}
