#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "rfdfin/antiforensic.hpp"
#include "rfdfin/cli.hpp"
#include "rfdfin/data.hpp"
#include "rfdfin/enhance.hpp"
#include "rfdfin/error.hpp"
#include "rfdfin/features.hpp"
#include "rfdfin/image_io.hpp"
#include "rfdfin/spectrum.hpp"
#include "rfdfin/tensor_file.hpp"

namespace py = pybind11;
using namespace rfdfin;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

GrayImage to_image(const U8Array& arr) {
  if (arr.ndim() != 2) throw Error(ErrorCode::InvalidArgument, "expected a 2D uint8 array");
  const auto h = static_cast<int>(arr.shape(0)), w = static_cast<int>(arr.shape(1));
  return GrayImage(w, h, std::vector<std::uint8_t>(arr.data(), arr.data() + arr.size()));
}

U8Array to_array(const GrayImage& img) {
  U8Array out({img.height(), img.width()});
  std::memcpy(out.mutable_data(), img.pixels().data(), img.size());
  return out;
}

F64Array plane(const std::vector<double>& values, int width, int height) {
  F64Array out({height, width});
  std::memcpy(out.mutable_data(), values.data(), values.size() * sizeof(double));
  return out;
}

std::vector<GrayImage> to_images(const std::vector<U8Array>& arrays) {
  std::vector<GrayImage> out;
  out.reserve(arrays.size());
  for (const auto& a : arrays) out.push_back(to_image(a));
  return out;
}

}  // namespace

PYBIND11_MODULE(_rfdfin, m) {
  m.doc() = "Ridge-feature fingerprint forgery detection";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error.ptr())(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("read_image", [](const std::filesystem::path& path) { return to_array(read_image(path)); });
  m.def("write_image", [](const U8Array& img, const std::filesystem::path& path) { write_image(to_image(img), path); });

  m.def("synth_impression", [](std::uint64_t identity_seed, int impression, bool fake, int size) {
        SynthOptions opt;
        opt.width = opt.height = size;
        return to_array(synth_impression(identity_seed, impression, fake ? SynthClass::FakeLike : SynthClass::RealLike, opt));
      },
      py::arg("identity_seed"), py::arg("impression") = 0, py::arg("fake") = false, py::arg("size") = 256);

  m.def("fft_log_spectrum", [](const U8Array& img) {
    const auto s = fft_log_spectrum(to_image(img));
    return plane(s.values, s.width, s.height);
  });
  m.def("dct_log_spectrum", [](const U8Array& img) {
    const auto s = dct2_log(to_float(to_image(img)));
    return plane(s.values, s.width, s.height);
  });
  m.def("mean_log_spectrum", [](const std::vector<U8Array>& imgs) {
    const auto images = to_images(imgs);
    const auto s = mean_spectrum(images);
    return plane(s.values, s.width, s.height);
  });

  m.def("ridge_preprocess", [](const U8Array& img) { return to_array(ridge_preprocess(to_image(img))); });
  m.def("ridge_feature", [](const U8Array& img, int crop) -> std::optional<std::vector<double>> {
        FeatureConfig cfg;
        cfg.crop_width = cfg.crop_height = crop;
        auto f = ridge_feature(to_image(img), cfg);
        if (!f) return std::nullopt;
        return f->values;
      },
      py::arg("img"), py::arg("crop") = 256);

  py::class_<SdnCorrection>(m, "SdnCorrection")
      .def_property_readonly("delta", [](const SdnCorrection& c) { return plane(c.delta.values, c.delta.width, c.delta.height); });
  py::class_<SpectrumDictionary>(m, "SpectrumDictionary")
      .def_readonly("radius_bins", &SpectrumDictionary::radius_bins)
      .def("__len__", [](const SpectrumDictionary& d) { return d.entries.size(); });

  m.def("fit_sdn", [](const std::vector<U8Array>& real, const std::vector<U8Array>& fake) {
    const auto r = to_images(real), f = to_images(fake);
    return fit_sdn(r, f);
  });
  m.def("fit_power_dictionary", [](const std::vector<U8Array>& real, int bins) {
        const auto r = to_images(real);
        return fit_power_dictionary(r, bins);
      },
      py::arg("real"), py::arg("radius_bins") = kDefaultRadiusBins);
  m.def("apply_sdn", [](const U8Array& img, const SdnCorrection& c) { return to_array(apply_sdn(to_image(img), c)); });
  m.def("apply_pdc", [](const U8Array& img, const SpectrumDictionary& d) { return to_array(apply_pdc(to_image(img), d)); });
  m.def("sdn_plus_plus", [](const U8Array& img, const SdnCorrection& c, const SpectrumDictionary& d) {
    return to_array(sdn_plus_plus(to_image(img), c, d));
  });

  py::class_<nn::Detector>(m, "Detector")
      .def(py::init([](std::uint64_t seed) { return nn::Detector(nn::ArchConfig{}, seed); }), py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& path) { return nn::Detector::from_state(TensorFile::load(path)); })
      .def("save", [](nn::Detector& d, const std::filesystem::path& path) { d.state().save(path); })
      .def_property_readonly("param_count", &nn::Detector::param_count)
      .def("predict", [](nn::Detector& d, const std::vector<U8Array>& imgs) {
        const auto images = to_images(imgs);
        const auto mode = d.arch().mode;
        std::vector<nn::FeatureSample> samples;
        for (const auto& img : images)
          samples.push_back(extract_features(img, 0, FeatureConfig{}, mode != nn::StreamMode::ArtifactOnly,
                                             mode != nn::StreamMode::RidgeOnly));
        return nn::predict(d, samples);
      });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    py::gil_scoped_release release;
    return run_cli(args);
  });
}
