// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

// JSON-shaped values cross the boundary as strings; the pure-Python layer in
// pbd/__init__.py turns them into dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.hpp"
#include "pbd/corners/corners.hpp"
#include "pbd/error.hpp"
#include "pbd/labels/labels.hpp"
#include "pbd/metrics/metrics.hpp"
#include "pbd/model/checkpoint.hpp"
#include "pbd/model/trainer.hpp"
#include "pbd/post/postproc.hpp"
#include "pbd/synth/dataset.hpp"

namespace py = pybind11;
using namespace pbd;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

template <class R>
U8Array to_array(const R& r) {
  U8Array a({r.height, r.width});
  std::copy(r.pixels.begin(), r.pixels.end(), a.mutable_data());
  return a;
}

GrayImage to_gray(const U8Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D uint8 image");
  GrayImage g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), g.pixels.begin());
  return g;
}

synth::RenderConfig render_config(const std::string& text) {
  return synth::render_config_from_json(json::parse(text.empty() ? "{}" : text));
}

std::string sample_scene(std::uint64_t seed, const std::string& cfg, const std::optional<std::vector<std::string>>& forced) {
  std::optional<synth::AttributeSet> attrs;
  if (forced) {
    attrs.emplace();
    for (const auto& name : *forced) attrs->insert(synth::parse_attribute(name));
  }
  return synth::scene_to_json(synth::sample_scene(seed, render_config(cfg), attrs)).dump();
}

py::dict make_labels(const std::string& scene, const std::string& strategy, int thickness) {
  const auto set = labels::make_labels(synth::scene_from_json(json::parse(scene)), labels::LabelStrategy::parse(strategy),
                                       thickness);
  py::dict d;
  d["point_a"] = to_array(set.point.anode);
  d["point_c"] = to_array(set.point.cathode);
  d["line_a"] = to_array(set.line.anode);
  d["line_c"] = to_array(set.line.cathode);
  d["n_anode"] = set.n_anode;
  d["n_cathode"] = set.n_cathode;
  return d;
}

std::vector<post::PredictionRecord> parse_records(const std::vector<std::string>& docs) {
  std::vector<post::PredictionRecord> out;
  for (const auto& d : docs) out.push_back(post::record_from_json(json::parse(d)));
  return out;
}

std::string evaluate(const std::vector<std::string>& preds, const std::vector<std::string>& gts,
                     const std::string& distance) {
  const auto p = parse_records(preds);
  const auto g = parse_records(gts);
  const auto report = metrics::compute_report(metrics::align(p, g), "all", metrics::parse_distance(distance));
  json j = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) { j[key] = v ? json(*v) : json(nullptr); };
  j["images"] = report.images;
  put("an_mae", report.an_mae);
  put("cn_mae", report.cn_mae);
  put("an_acc", report.an_acc);
  put("cn_acc", report.cn_acc);
  put("pn_acc", report.pn_acc);
  put("al_mae", report.al_mae);
  put("cl_mae", report.cl_mae);
  put("oh_mae", report.oh_mae);
  return j.dump();
}

std::vector<std::pair<double, double>> detect_corners(const U8Array& image, const std::string& method, int window,
                                                      double k, int nms_radius, double threshold_rel,
                                                      bool edge_prefilter, bool refine) {
  corners::CornerOptions o;
  o.window = window;
  o.k = k;
  o.nms_radius = nms_radius;
  o.threshold_rel = threshold_rel;
  o.edge_prefilter = edge_prefilter;
  const FloatImage f = corners::to_float(to_gray(image));
  std::vector<post::PointD> pts;
  if (method == "harris") {
    pts = corners::harris(f, o);
  } else if (method == "shi-tomasi") {
    pts = corners::shi_tomasi(f, o);
  } else {
    throw ConfigError("unknown corner method '" + method + "' (harris, shi-tomasi)");
  }
  if (refine) {
    const auto refined = corners::subpixel_refine(f, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = refined[i].p;
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& p : pts) out.emplace_back(p.x, p.y);
  return out;
}

class Model {
 public:
  explicit Model(const std::string& cfg)
      : net_(std::make_unique<model::Mdcnet>(model::model_config_from_json(json::parse(cfg.empty() ? "{}" : cfg)))) {}
  explicit Model(std::unique_ptr<model::Mdcnet> net) : net_(std::move(net)) {}

  std::string config() const { return model::to_json(net_->config()).dump(); }
  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& p : net_->params().items()) n += p.tensor.shape().numel();
    return n;
  }

  std::vector<double> train(const std::vector<U8Array>& images, const std::vector<std::string>& scenes,
                            const U8Array& prompt, const std::string& strategy, std::optional<long> max_steps) {
    if (images.size() != scenes.size()) throw ContractError("images and scenes differ in length");
    std::vector<model::TrainExample> data;
    for (std::size_t i = 0; i < images.size(); ++i) {
      data.push_back({to_gray(images[i]), synth::scene_from_json(json::parse(scenes[i]))});
    }
    model::TrainOptions opts;
    opts.labels = labels::LabelStrategy::parse(strategy);
    opts.max_steps = max_steps;
    const GrayImage p = to_gray(prompt);
    model::TrainResult r;
    {
      py::gil_scoped_release release;
      r = model::train(*net_, data, p, opts);
    }
    std::vector<double> losses;
    for (const auto& row : r.log) losses.push_back(row.loss_total);
    return losses;
  }

  std::string predict(const U8Array& image, const U8Array& prompt, const std::string& id, double threshold,
                      int min_area) const {
    post::PostprocOptions o;
    o.threshold = threshold;
    o.min_area = min_area;
    const auto pf = model::prompt_features(*net_, to_gray(prompt));
    return post::to_json(post::to_record(model::infer(*net_, to_gray(image), pf), id, o)).dump();
  }

  void save(const std::filesystem::path& path) const { model::save_checkpoint(path, *net_); }
  static Model load(const std::filesystem::path& path) { return Model(model::load_checkpoint(path).model); }

 private:
  std::unique_ptr<model::Mdcnet> net_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the pbd package";

  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("sample_scene", &sample_scene, py::arg("seed"), py::arg("render_config") = "{}",
        py::arg("forced") = py::none());
  m.def("render", [](const std::string& scene, const std::string& cfg) {
    return to_array(synth::render(synth::scene_from_json(json::parse(scene)), render_config(cfg)));
  }, py::arg("scene"), py::arg("render_config") = "{}");
  m.def("prompt_scene", [](std::uint64_t seed, const std::string& cfg) {
    return synth::scene_to_json(synth::prompt_scene(seed, render_config(cfg))).dump();
  }, py::arg("seed") = synth::kDefaultPromptSeed, py::arg("render_config") = "{}");
  m.def("scene_record", [](const std::string& scene, const std::string& id) {
    return post::to_json(post::scene_record(synth::scene_from_json(json::parse(scene)), id)).dump();
  }, py::arg("scene"), py::arg("id"));
  m.def("make_labels", &make_labels, py::arg("scene"), py::arg("strategy") = "ada:0.3",
        py::arg("line_thickness") = labels::kDefaultLineThickness);
  m.def("evaluate", &evaluate, py::arg("predictions"), py::arg("ground_truth"), py::arg("distance") = "euclidean");
  m.def("detect_corners", &detect_corners, py::arg("image"), py::arg("method") = "harris", py::arg("window") = 5,
        py::arg("k") = 0.04, py::arg("nms_radius") = 3, py::arg("threshold_rel") = 0.01,
        py::arg("edge_prefilter") = true, py::arg("refine") = false);
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("config") = "{}")
      .def_property_readonly("config", &Model::config)
      .def_property_readonly("num_parameters", &Model::num_parameters)
      .def("train", &Model::train, py::arg("images"), py::arg("scenes"), py::arg("prompt"),
           py::arg("labels") = "ada:0.3", py::arg("max_steps") = py::none())
      .def("predict", &Model::predict, py::arg("image"), py::arg("prompt"), py::arg("id") = "image",
           py::arg("threshold") = 0.5, py::arg("min_area") = 2)
      .def("save", &Model::save, py::arg("path"))
      .def_static("load", &Model::load, py::arg("path"));
}
