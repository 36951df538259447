// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>

#include "pbd/corners/corners.hpp"
#include "pbd/error.hpp"
#include "pbd/labels/labels.hpp"
#include "pbd/metrics/metrics.hpp"
#include "pbd/model/checkpoint.hpp"
#include "pbd/model/trainer.hpp"
#include "pbd/post/postproc.hpp"
#include "pbd/synth/dataset.hpp"

namespace pbd::cli {

namespace fs = std::filesystem;

namespace {

struct Global {
  std::string workdir = ".";
  std::uint64_t seed = 0;
  std::string config;
};

fs::path resolve(const Global& g, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : fs::path(g.workdir) / path;
}

std::uint64_t effective_seed(const Global& g) {
  const char* env = std::getenv("PBD_SEED");
  if (env == nullptr || *env == '\0') return g.seed;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(std::string("PBD_SEED is not an unsigned integer: ") + env);
  return v;
}

// The config file holds optional "render" and "model" objects.
json config_section(const Global& g, const char* section) {
  if (g.config.empty()) return json::object();
  const json doc = read_json(resolve(g, g.config));
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "render" && key != "model") throw ConfigError("unknown config section: " + key);
  }
  return doc.value(section, json::object());
}

std::vector<synth::ManifestEntry> select(const synth::DatasetManifest& m, const std::string& subset) {
  if (subset == "all") return m.entries;
  return m.select(synth::parse_subset(subset));
}

GrayImage load_prompt(const Global& g, const std::string& flag, const synth::DatasetManifest& m) {
  return read_pgm(flag.empty() ? m.root / "prompt.pgm" : resolve(g, flag));
}

void ensure_parent(const fs::path& p) {
  if (!p.has_parent_path()) return;
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
}

struct SynthArgs {
  std::size_t count = 100;
  std::string out = "data";
  std::string labels = "ada:0.3";
  int line_thickness = labels::kDefaultLineThickness;
  std::uint64_t prompt_seed = synth::kDefaultPromptSeed;
};

int cmd_synth(const Global& g, const SynthArgs& a, std::ostream& out) {
  const synth::RenderConfig rc = synth::render_config_from_json(config_section(g, "render"));
  const labels::LabelStrategy strategy = labels::LabelStrategy::parse(a.labels);
  if (a.line_thickness < 1) throw ConfigError("line thickness must be >= 1");
  const std::uint64_t seed = effective_seed(g);
  const fs::path root = resolve(g, a.out);

  const synth::DatasetManifest manifest = synth::generate_dataset(a.count, seed, rc, root);
  std::error_code ec;
  fs::create_directories(root / "labels", ec);
  if (ec) throw IoError("cannot create " + (root / "labels").string() + ": " + ec.message());
  for (const auto& e : manifest.entries) {
    const synth::BatteryScene scene = synth::read_annotation(root / e.annotation);
    const labels::LabelSet set = labels::make_labels(scene, strategy, a.line_thickness);
    const fs::path base = root / "labels" / e.id;
    write_pgm(base.string() + "_point_a.pgm", set.point.anode);
    write_pgm(base.string() + "_point_c.pgm", set.point.cathode);
    write_pgm(base.string() + "_line_a.pgm", set.line.anode);
    write_pgm(base.string() + "_line_c.pgm", set.line.cathode);
  }
  write_pgm(root / "prompt.pgm", synth::render(synth::prompt_scene(a.prompt_seed, rc), rc));
  write_json(root / "dataset.json", json{{"seed", seed},
                                         {"count", a.count},
                                         {"labels", strategy.str()},
                                         {"line_thickness", a.line_thickness},
                                         {"prompt_seed", a.prompt_seed},
                                         {"render", synth::to_json(rc)}});
  out << "wrote " << manifest.entries.size() << " scenes to " << root.string() << "\n";
  return kOk;
}

struct TrainArgs {
  std::string manifest = "data/manifest.json";
  std::string out = "model.ckpt";
  std::string log = "train_log.csv";
  std::string labels = "ada:0.3";
  std::string prompt;
  std::string subset = "train";
  int epochs = 0;
  int batch_size = 0;
  double lr = 0;
  long max_steps = 0;
  bool no_pfm = false;
  bool no_cp = false;
  bool no_lp = false;
};

int cmd_train(const Global& g, const TrainArgs& a, std::ostream& out) {
  model::ModelConfig cfg = model::model_config_from_json(config_section(g, "model"));
  cfg.seed = effective_seed(g);
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.batch_size > 0) cfg.batch_size = a.batch_size;
  if (a.lr > 0) cfg.lr = a.lr;
  if (a.no_pfm) cfg.use_pfm = false;
  if (a.no_cp) cfg.use_count = false;
  if (a.no_lp) cfg.use_line = false;
  cfg.validate();

  model::TrainOptions opts;
  opts.labels = labels::LabelStrategy::parse(a.labels);
  if (a.max_steps > 0) opts.max_steps = a.max_steps;

  const synth::DatasetManifest m = synth::read_manifest(resolve(g, a.manifest));
  std::vector<model::TrainExample> data;
  for (const auto& e : select(m, a.subset)) {
    model::TrainExample ex{read_pgm(m.root / e.image), synth::read_annotation(m.root / e.annotation)};
    if (ex.image.height != cfg.input_size || ex.image.width != cfg.input_size) {
      throw ConfigError("image " + e.id + " is " + std::to_string(ex.image.width) + "x" +
                        std::to_string(ex.image.height) + " but input_size is " + std::to_string(cfg.input_size));
    }
    data.push_back(std::move(ex));
  }
  const GrayImage prompt = load_prompt(g, a.prompt, m);

  model::Mdcnet net(cfg);
  const model::TrainResult result = model::train(net, data, prompt, opts);

  const fs::path ckpt = resolve(g, a.out);
  ensure_parent(ckpt);
  model::save_checkpoint(ckpt, net, json{{"labels", opts.labels.str()}, {"steps", result.steps}});
  const fs::path log = resolve(g, a.log);
  ensure_parent(log);
  std::ofstream os(log, std::ios::binary);
  if (!os) throw IoError("cannot write training log: " + log.string());
  model::write_train_log_csv(os, result.log);
  if (!os) throw IoError("failed writing training log: " + log.string());

  out << "trained " << result.steps << " steps on " << data.size() << " images";
  if (!result.log.empty()) out << ", final loss " << result.log.back().loss_total;
  out << "\n";
  return kOk;
}

struct PredictArgs {
  std::string checkpoint = "model.ckpt";
  std::string manifest = "data/manifest.json";
  std::string out = "predictions.jsonl";
  std::string prompt;
  std::string subset = "test";
  post::PostprocOptions post;
};

int cmd_predict(const Global& g, const PredictArgs& a, std::ostream& out) {
  if (!(a.post.threshold > 0.0 && a.post.threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  if (a.post.min_area < 1) throw ConfigError("min-area must be >= 1");
  const model::Checkpoint ckpt = model::load_checkpoint(resolve(g, a.checkpoint));
  const synth::DatasetManifest m = synth::read_manifest(resolve(g, a.manifest));
  const model::PromptFeatures pf = model::prompt_features(*ckpt.model, load_prompt(g, a.prompt, m));
  std::vector<post::PredictionRecord> records;
  for (const auto& e : select(m, a.subset)) {
    const GrayImage image = read_pgm(m.root / e.image);
    records.push_back(post::to_record(model::infer(*ckpt.model, image, pf), e.id, a.post));
  }
  const fs::path path = resolve(g, a.out);
  ensure_parent(path);
  post::write_records_jsonl(path, records);
  out << "wrote " << records.size() << " records to " << path.string() << "\n";
  return kOk;
}

std::vector<post::PredictionRecord> ground_truth(const synth::DatasetManifest& m,
                                                 const std::vector<synth::ManifestEntry>& entries) {
  std::vector<post::PredictionRecord> gts;
  for (const auto& e : entries) gts.push_back(post::scene_record(synth::read_annotation(m.root / e.annotation), e.id));
  return gts;
}

struct EvalArgs {
  std::string records = "predictions.jsonl";
  std::string manifest = "data/manifest.json";
  std::string report;
  std::string subset = "test";
  std::string distance = "euclidean";
  std::string method;
};

int cmd_eval(const Global& g, const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const metrics::Distance d = metrics::parse_distance(a.distance);
  const auto preds = post::read_records_jsonl(resolve(g, a.records));
  const synth::DatasetManifest m = synth::read_manifest(resolve(g, a.manifest));
  const auto entries = select(m, a.subset);
  const metrics::Evaluation ev = metrics::evaluate(preds, ground_truth(m, entries), entries, d);
  out << metrics::format_table(ev, a.method);
  for (const auto& w : ev.warnings) err << "warning: " << w << "\n";
  if (!a.report.empty()) {
    const fs::path path = resolve(g, a.report);
    ensure_parent(path);
    write_json(path, metrics::to_json(ev));
  }
  return kOk;
}

struct RenderArgs {
  std::string records;
  std::string manifest = "data/manifest.json";
  std::string out = "renders";
  std::string subset = "test";
  bool ground_truth = false;
  bool no_lines = false;
};

int cmd_render(const Global& g, const RenderArgs& a, std::ostream& out) {
  if (a.records.empty() == !a.ground_truth) throw ConfigError("render needs exactly one of --records or --ground-truth");
  const synth::DatasetManifest m = synth::read_manifest(resolve(g, a.manifest));
  const auto entries = select(m, a.subset);
  std::map<std::string, post::PredictionRecord> by_id;
  const auto records = a.ground_truth ? ground_truth(m, entries) : post::read_records_jsonl(resolve(g, a.records));
  for (const auto& r : records) by_id[r.id] = r;
  const fs::path dir = resolve(g, a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& e : entries) {
    auto it = by_id.find(e.id);
    const post::PredictionRecord rec = it == by_id.end() ? post::PredictionRecord{e.id, {}, {}, 0, 0} : it->second;
    write_ppm(dir / (e.id + ".ppm"), post::overlay(read_pgm(m.root / e.image), rec, !a.no_lines));
  }
  out << "rendered " << entries.size() << " images to " << dir.string() << "\n";
  return kOk;
}

struct CornerArgs {
  std::string manifest = "data/manifest.json";
  std::string out = "corners.jsonl";
  std::string method = "harris";
  std::string subset = "test";
  corners::CornerOptions opts;
  bool no_prefilter = false;
  bool refine = false;
};

int cmd_corners(const Global& g, const CornerArgs& a, std::ostream& out) {
  corners::CornerOptions opts = a.opts;
  opts.edge_prefilter = !a.no_prefilter;
  if (opts.window < 1 || opts.window % 2 == 0) throw ConfigError("window must be a positive odd integer");
  if (opts.nms_radius < 0) throw ConfigError("nms-radius must be >= 0");
  const synth::DatasetManifest m = synth::read_manifest(resolve(g, a.manifest));
  std::vector<post::PredictionRecord> records;
  for (const auto& e : select(m, a.subset)) {
    const FloatImage image = corners::to_float(read_pgm(m.root / e.image));
    std::vector<post::PointD> pts = a.method == "harris" ? corners::harris(image, opts) : corners::shi_tomasi(image, opts);
    if (a.refine) {
      std::vector<post::PointD> refined;
      for (const auto& rc : corners::subpixel_refine(image, pts)) refined.push_back(rc.p);
      pts = std::move(refined);
    }
    records.push_back(corners::corners_to_record(pts, e.id));
  }
  const fs::path path = resolve(g, a.out);
  ensure_parent(path);
  post::write_records_jsonl(path, records);
  out << "wrote " << records.size() << " " << a.method << " records to " << path.string() << "\n";
  return kOk;
}

struct LabelRecordArgs {
  std::string manifest = "data/manifest.json";
  std::string out = "labels.jsonl";
  std::string subset = "test";
  int min_area = 2;
};

// Reads the point masks written by `synth` and post-processes them as if
// they were model outputs.
int cmd_label_records(const Global& g, const LabelRecordArgs& a, std::ostream& out) {
  const synth::DatasetManifest m = synth::read_manifest(resolve(g, a.manifest));
  std::vector<post::PredictionRecord> records;
  for (const auto& e : select(m, a.subset)) {
    const fs::path base = m.root / "labels" / e.id;
    const labels::MaskPair masks{read_mask_pgm(base.string() + "_point_a.pgm"),
                                 read_mask_pgm(base.string() + "_point_c.pgm")};
    records.push_back(post::masks_to_record(masks, e.id, a.min_area));
  }
  const fs::path path = resolve(g, a.out);
  ensure_parent(path);
  post::write_records_jsonl(path, records);
  out << "wrote " << records.size() << " label records to " << path.string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Power battery plate endpoint detection toolkit", "pbd"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  app.add_option("--workdir", g.workdir, "Root for all relative paths");
  app.add_option("--seed", g.seed, "Random seed (PBD_SEED overrides)");
  app.add_option("--config", g.config, "JSON file with optional \"render\" and \"model\" objects");

  const std::vector<std::string> subsets = {"train", "test", "all"};

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with labels");
  synth_cmd->add_option("-n,--count", sa.count, "Number of scenes")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--out", sa.out, "Output directory");
  synth_cmd->add_option("--labels", sa.labels, "Point label strategy: ada:<factor> or const:<radius>");
  synth_cmd->add_option("--line-thickness", sa.line_thickness, "Line label thickness in pixels");
  synth_cmd->add_option("--prompt-seed", sa.prompt_seed, "Seed of the pure-P prompt scene");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--manifest", ta.manifest, "Dataset manifest");
  train_cmd->add_option("--out", ta.out, "Checkpoint path");
  train_cmd->add_option("--log", ta.log, "Training log CSV");
  train_cmd->add_option("--labels", ta.labels, "Point label strategy: ada:<factor> or const:<radius>");
  train_cmd->add_option("--prompt", ta.prompt, "Prompt image (default: prompt.pgm next to the manifest)");
  train_cmd->add_option("--subset", ta.subset, "Manifest subset")->check(CLI::IsMember(subsets));
  train_cmd->add_option("--epochs", ta.epochs, "Override epochs (0 keeps the config value)");
  train_cmd->add_option("--batch-size", ta.batch_size, "Override batch size (0 keeps the config value)");
  train_cmd->add_option("--lr", ta.lr, "Override learning rate (0 keeps the config value)");
  train_cmd->add_option("--max-steps", ta.max_steps, "Stop after this many steps (0 = no limit)");
  train_cmd->add_flag("--no-pfm", ta.no_pfm, "Disable the prompt filter module");
  train_cmd->add_flag("--no-cp", ta.no_cp, "Disable the counting branch");
  train_cmd->add_flag("--no-lp", ta.no_lp, "Disable the line branch");

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Run a checkpoint over a dataset");
  predict_cmd->add_option("--checkpoint", pa.checkpoint, "Checkpoint path");
  predict_cmd->add_option("--manifest", pa.manifest, "Dataset manifest");
  predict_cmd->add_option("--out", pa.out, "Output JSON-lines records");
  predict_cmd->add_option("--prompt", pa.prompt, "Prompt image (default: prompt.pgm next to the manifest)");
  predict_cmd->add_option("--subset", pa.subset, "Manifest subset")->check(CLI::IsMember(subsets));
  predict_cmd->add_option("--threshold", pa.post.threshold, "Point map binarisation threshold");
  predict_cmd->add_option("--min-area", pa.post.min_area, "Smallest kept blob in pixels");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Score records against the annotations");
  eval_cmd->add_option("--records", ea.records, "JSON-lines records");
  eval_cmd->add_option("--manifest", ea.manifest, "Dataset manifest");
  eval_cmd->add_option("--report", ea.report, "Optional JSON report path");
  eval_cmd->add_option("--subset", ea.subset, "Manifest subset")->check(CLI::IsMember(subsets));
  eval_cmd->add_option("--distance", ea.distance, "euclidean or vertical")
      ->check(CLI::IsMember({"euclidean", "vertical"}));
  eval_cmd->add_option("--method", ea.method, "Row label for the table");

  RenderArgs ra;
  auto* render_cmd = app.add_subcommand("render", "Overlay records on the input images (PPM)");
  render_cmd->add_option("--records", ra.records, "JSON-lines records");
  render_cmd->add_flag("--ground-truth", ra.ground_truth, "Render the annotations instead of records");
  render_cmd->add_option("--manifest", ra.manifest, "Dataset manifest");
  render_cmd->add_option("--out", ra.out, "Output directory");
  render_cmd->add_option("--subset", ra.subset, "Manifest subset")->check(CLI::IsMember(subsets));
  render_cmd->add_flag("--no-lines", ra.no_lines, "Draw points only");

  CornerArgs ca;
  auto* corners_cmd = app.add_subcommand("corners", "Corner-detector baseline records");
  corners_cmd->add_option("--manifest", ca.manifest, "Dataset manifest");
  corners_cmd->add_option("--out", ca.out, "Output JSON-lines records");
  corners_cmd->add_option("--method", ca.method, "harris or shi-tomasi")
      ->check(CLI::IsMember({"harris", "shi-tomasi"}));
  corners_cmd->add_option("--subset", ca.subset, "Manifest subset")->check(CLI::IsMember(subsets));
  corners_cmd->add_option("--window", ca.opts.window, "Structure tensor window (odd)");
  corners_cmd->add_option("--k", ca.opts.k, "Harris k");
  corners_cmd->add_option("--nms-radius", ca.opts.nms_radius, "Suppression radius");
  corners_cmd->add_option("--threshold-rel", ca.opts.threshold_rel, "Relative response threshold");
  corners_cmd->add_flag("--no-edge-prefilter", ca.no_prefilter, "Score every pixel");
  corners_cmd->add_flag("--refine", ca.refine, "Sub-pixel refinement");

  LabelRecordArgs la;
  auto* label_cmd = app.add_subcommand("label-records", "Post-process the stored point labels into records");
  label_cmd->add_option("--manifest", la.manifest, "Dataset manifest");
  label_cmd->add_option("--out", la.out, "Output JSON-lines records");
  label_cmd->add_option("--subset", la.subset, "Manifest subset")->check(CLI::IsMember(subsets));
  label_cmd->add_option("--min-area", la.min_area, "Smallest kept blob in pixels");

  std::vector<const char*> argv{"pbd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*synth_cmd) return cmd_synth(g, sa, out);
    if (*train_cmd) return cmd_train(g, ta, out);
    if (*predict_cmd) return cmd_predict(g, pa, out);
    if (*eval_cmd) return cmd_eval(g, ea, out, err);
    if (*render_cmd) return cmd_render(g, ra, out);
    if (*corners_cmd) return cmd_corners(g, ca, out);
    if (*label_cmd) return cmd_label_records(g, la, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kIo;
  } catch (const ContractError& e) {
    err << "contract violation: " << e.what() << "\n";
    return kContract;
  } catch (const DimensionError& e) {
    err << "contract violation: " << e.what() << "\n";
    return kContract;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kContract;
  }
  return kConfig;
}

}  // namespace pbd::cli
