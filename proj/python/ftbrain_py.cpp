#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "ftbrain/cam.hpp"
#include "ftbrain/checkpoint.hpp"
#include "ftbrain/entropy.hpp"
#include "ftbrain/error.hpp"
#include "ftbrain/folds.hpp"
#include "ftbrain/model.hpp"
#include "ftbrain/stats.hpp"
#include "ftbrain/synth.hpp"
#include "ftbrain/train.hpp"

namespace py = pybind11;
using namespace ftbrain;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Image to_image(const FloatArray& a) {
  if (a.ndim() != 2) throw InvalidArgument("python", "expected a 2-D float array");
  Image img(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(img.pixels.data(), a.data(), img.size() * sizeof(float));
  return img;
}

FloatArray from_image(const Image& img) {
  FloatArray out({img.height, img.width});
  std::memcpy(out.mutable_data(), img.pixels.data(), img.size() * sizeof(float));
  return out;
}

Tensor to_tensor(const FloatArray& a) {
  Shape s;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) s.push_back(static_cast<std::size_t>(a.shape(i)));
  return Tensor(s, std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  FloatArray out(shape);
  std::memcpy(out.mutable_data(), t.data(), t.size() * sizeof(float));
  return out;
}

Volume to_volume(const ByteArray& a, const std::string& subject_id) {
  if (a.ndim() != 3) throw InvalidArgument("python", "expected a [z, y, x] uint8 array");
  Volume v;
  v.subject_id = subject_id;
  v.dims = {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
            static_cast<std::size_t>(a.shape(2))};
  v.voxels = std::vector<std::uint8_t>(a.data(), a.data() + a.size());
  return v;
}

ModelSpec make_spec(const std::string& preset, const std::string& head, bool cam_head) {
  ModelSpec s;
  if (preset == "desk") s = ModelSpec::desk();
  else if (preset == "paper") s = ModelSpec::paper();
  else throw InvalidArgument("python", "preset must be 'desk' or 'paper'");
  s.head = parse_head_kind(head);
  s.cam_head = cam_head;
  return s;
}

SampleSet to_samples(const Model& model, const FloatArray& x, const std::vector<int>& y,
                     const std::vector<std::string>& subjects) {
  const ModelSpec& s = model.spec();
  if (x.ndim() != 4 || static_cast<std::size_t>(x.shape(1)) != s.channels ||
      static_cast<std::size_t>(x.shape(2)) != s.height || static_cast<std::size_t>(x.shape(3)) != s.width) {
    throw InvalidArgument("python", "inputs must be [N, channels, height, width] for this model");
  }
  const auto n = static_cast<std::size_t>(x.shape(0));
  if (y.size() != n || subjects.size() != n) {
    throw InvalidArgument("python", "labels and subjects must have one entry per sample");
  }
  SampleSet set;
  set.sample_shape = {s.channels, s.height, s.width};
  const std::size_t step = set.sample_size();
  for (std::size_t i = 0; i < n; ++i) {
    set.append(std::span<const float>(x.data() + i * step, step), y[i], subjects[i]);
  }
  return set;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Entropy-based slice selection, VGG-style transfer learning and class activation maps";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def(
      "synth_volume",
      [](const std::string& label, std::uint64_t seed, std::tuple<std::size_t, std::size_t, std::size_t> dims) {
        const auto [z, y, x] = dims;
        const Volume v = synth_generate(parse_label(label), seed, Dims{z, y, x});
        const auto& vox = std::get<std::vector<std::uint8_t>>(v.voxels);
        ByteArray out({z, y, x});
        std::memcpy(out.mutable_data(), vox.data(), vox.size());
        return out;
      },
      py::arg("label"), py::arg("seed"), py::arg("dims") = std::make_tuple(kDeskSynthDims.z, kDeskSynthDims.y, kDeskSynthDims.x),
      "Synthetic MRI-like uint8 volume [z, y, x] for label AD, MCI or NC.");

  m.def("class_factor", [](const std::string& label) { return class_factor(parse_label(label)); },
        py::arg("label"));

  m.def("histogram", [](const FloatArray& img) { return histogram(to_image(img)); }, py::arg("image"),
        "256-bin histogram of a [0, 1] image.");
  m.def("image_entropy", [](const FloatArray& img) { return image_entropy(to_image(img)); }, py::arg("image"),
        "Shannon entropy in bits of a [0, 1] image over 256 bins.");

  m.def(
      "rank_slices",
      [](const ByteArray& volume) {
        auto slices = extract_axial(to_volume(volume, "volume"));
        for (auto& s : slices) normalize(s);
        std::vector<std::pair<std::size_t, double>> out;
        for (const auto& e : rank_slices(slices).entries) out.emplace_back(e.slice_index, e.entropy_bits);
        return out;
      },
      py::arg("volume"), "Axial slices of a uint8 volume as (index, entropy) pairs, highest entropy first.");

  m.def(
      "select_top_k",
      [](const ByteArray& volume, std::size_t k) {
        auto slices = extract_axial(to_volume(volume, "volume"));
        for (auto& s : slices) normalize(s);
        return select_top_k(rank_slices(slices), k);
      },
      py::arg("volume"), py::arg("k"));

  m.def("select_random_k", &select_random_k, py::arg("slice_count"), py::arg("k"), py::arg("seed"));

  m.def(
      "mann_kendall",
      [](const std::vector<double>& series) {
        const TrendResult t = mann_kendall(series);
        py::dict d;
        d["S"] = t.s;
        d["variance"] = t.variance;
        d["z"] = t.z;
        d["p"] = t.p_two_sided;
        d["n"] = t.n;
        return d;
      },
      py::arg("series"), "Mann-Kendall trend test with tie correction; returns S, variance, z, p, n.");

  m.def(
      "kfold_subject_split",
      [](const std::vector<std::string>& ids, const std::vector<std::string>& labels, std::size_t k,
         std::uint64_t seed) {
        if (ids.size() != labels.size()) throw InvalidArgument("python", "ids and labels differ in length");
        std::vector<SubjectEntry> subjects;
        for (std::size_t i = 0; i < ids.size(); ++i) subjects.push_back({ids[i], parse_label(labels[i])});
        return kfold_subject_split(subjects, k, seed).folds;
      },
      py::arg("subject_ids"), py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 0,
      "Stratified subject-wise folds; element i is the test side of fold i.");

  py::class_<Model>(m, "Model")
      .def(py::init([](const std::string& preset, const std::string& head, bool cam_head, std::uint64_t seed) {
             return Model(make_spec(preset, head, cam_head), seed);
           }),
           py::arg("preset") = "desk", py::arg("head") = "sigmoid-binary", py::arg("cam_head") = false,
           py::arg("seed") = 0)
      .def_static(
          "load", [](const std::string& path) { return model_from_checkpoint(read_checkpoint(path)); },
          py::arg("path"))
      .def("save", [](const Model& mdl, const std::string& path) { save_checkpoint(mdl, path); }, py::arg("path"))
      .def_property_readonly("input_shape",
                             [](const Model& mdl) {
                               const auto& s = mdl.spec();
                               return std::make_tuple(s.channels, s.height, s.width);
                             })
      .def_property_readonly("conv_layers", [](const Model& mdl) { return mdl.spec().conv_layer_count(); })
      .def("parameter_count", &Model::parameter_count)
      .def("trainable_parameter_count", &Model::trainable_parameter_count)
      .def("parameter_names",
           [](const Model& mdl) {
             std::vector<std::string> names;
             for (const auto& p : mdl.parameters()) names.push_back(p.name);
             return names;
           })
      .def("parameter", [](const Model& mdl, const std::string& name) { return from_tensor(mdl.parameter(name).value); },
           py::arg("name"))
      .def("freeze", [](Model& mdl, const std::string& group) { return mdl.apply_freeze(parse_freeze_group(group)); },
           py::arg("group"), "Freeze a conv prefix (All, G1..G4); returns the trainable mask.")
      .def("predict", [](const Model& mdl, const FloatArray& x) { return from_tensor(mdl.predict(to_tensor(x))); },
           py::arg("x"), "Class probabilities for a batch [N, C, H, W].")
      .def(
          "fit",
          [](Model& mdl, const FloatArray& x, const std::vector<int>& y, const std::vector<std::string>& subjects,
             std::size_t epochs, double lr, std::size_t batch_size, const std::string& freeze_group,
             std::uint64_t seed) {
            TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.lr = lr;
            cfg.batch_size = batch_size;
            cfg.freeze_group = parse_freeze_group(freeze_group);
            cfg.seed = seed;
            const LearningCurve c = train(mdl, to_samples(mdl, x, y, subjects), SampleSet{}, cfg);
            std::vector<double> losses{c.initial_train_loss};
            for (const auto& p : c.points) losses.push_back(p.train_loss);
            return losses;
          },
          py::arg("x"), py::arg("y"), py::arg("subjects"), py::arg("epochs") = 10, py::arg("lr") = 1e-4,
          py::arg("batch_size") = 25, py::arg("freeze_group") = "All", py::arg("seed") = 0,
          "Adam training; returns the training loss before the first update and after each epoch.")
      .def(
          "evaluate",
          [](const Model& mdl, const FloatArray& x, const std::vector<int>& y) {
            const std::vector<std::string> ids(y.size(), "eval");
            const FoldReport r = evaluate(mdl, to_samples(mdl, x, y, ids));
            py::dict d;
            d["accuracy"] = r.accuracy;
            d["sensitivity"] = r.sensitivity;
            d["specificity"] = r.specificity;
            d["confusion"] = r.confusion;
            return d;
          },
          py::arg("x"), py::arg("y"));

  m.def(
      "cam_from_features",
      [](const FloatArray& features, const std::vector<float>& weights, std::size_t out_h, std::size_t out_w) {
        return from_image(cam_from_features(to_tensor(features), weights, out_h, out_w).values);
      },
      py::arg("features"), py::arg("weights"), py::arg("out_h"), py::arg("out_w"),
      "Weighted channel sum of [C, h, w] features, clipped at 0, resized and max-normalized.");

  m.def(
      "compute_cam",
      [](const Model& mdl, const FloatArray& image, int class_index) {
        const Heatmap h = compute_cam(mdl, to_image(image), class_index);
        return py::make_tuple(from_image(h.values), py::make_tuple(h.peak_row, h.peak_col));
      },
      py::arg("model"), py::arg("image"), py::arg("class_index"),
      "Class activation map of a GAP-head model; returns (heatmap, (peak_row, peak_col)).");

  m.def(
      "overlay",
      [](const FloatArray& image, const FloatArray& heat, double alpha) {
        Heatmap h;
        h.values = to_image(heat);
        const RgbImage rgb = overlay(to_image(image), h, alpha);
        ByteArray out({rgb.height, rgb.width, std::size_t{3}});
        std::memcpy(out.mutable_data(), rgb.rgb.data(), rgb.rgb.size());
        return out;
      },
      py::arg("image"), py::arg("heatmap"), py::arg("alpha") = 0.5, "Red-tinted RGB overlay [H, W, 3].");
}
