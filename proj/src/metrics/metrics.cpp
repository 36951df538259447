// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "pbd/error.hpp"

namespace pbd::metrics {

std::string_view to_string(Distance d) { return d == Distance::Euclidean ? "euclidean" : "vertical"; }

Distance parse_distance(std::string_view s) {
  if (s == "euclidean") return Distance::Euclidean;
  if (s == "vertical") return Distance::Vertical;
  throw ConfigError("distance must be euclidean or vertical, got " + std::string(s));
}

double point_distance(const PointD& a, const PointD& b, Distance d) {
  if (d == Distance::Vertical) return std::abs(a.y - b.y);
  return std::hypot(a.x - b.x, a.y - b.y);
}

std::vector<Pair> align(const std::vector<PredictionRecord>& preds, const std::vector<PredictionRecord>& gts) {
  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& g : gts) by_id[g.id] = &g;
  std::vector<Pair> pairs;
  std::set<std::string> matched;
  std::vector<std::string> missing_gt;
  for (const auto& p : preds) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) {
      missing_gt.push_back(p.id);
    } else {
      pairs.push_back(Pair{&p, it->second});
      matched.insert(p.id);
    }
  }
  std::vector<std::string> missing_pred;
  for (const auto& g : gts) {
    if (!matched.count(g.id)) missing_pred.push_back(g.id);
  }
  if (!missing_gt.empty() || !missing_pred.empty()) {
    std::string msg = "records and ground truth disagree;";
    auto list = [&msg](const char* what, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" ") + what + ":";
      for (std::size_t i = 0; i < ids.size() && i < 20; ++i) msg += " " + ids[i];
      if (ids.size() > 20) msg += " ...";
    };
    list("no ground truth for", missing_gt);
    list("no prediction for", missing_pred);
    throw DataError(msg);
  }
  return pairs;
}

CountMetrics count_metrics(const std::vector<Pair>& pairs) {
  CountMetrics m;
  if (pairs.empty()) return m;
  for (const auto& [pred, gt] : pairs) {
    const bool a_ok = pred->n_anode == gt->n_anode;
    const bool c_ok = pred->n_cathode == gt->n_cathode;
    m.an_mae += std::abs(pred->n_anode - gt->n_anode);
    m.cn_mae += std::abs(pred->n_cathode - gt->n_cathode);
    m.an_acc += a_ok;
    m.cn_acc += c_ok;
    m.pn_acc += a_ok && c_ok;
  }
  const double n = static_cast<double>(pairs.size());
  m.an_mae /= n;
  m.cn_mae /= n;
  m.an_acc /= n;
  m.cn_acc /= n;
  m.pn_acc /= n;
  return m;
}

namespace {
std::vector<PointD> sorted(std::vector<PointD> v) {
  post::sort_points(v);
  return v;
}

// Mean per-plate distance over images whose list lengths match; zero-plate
// images carry no positions and are left out.
std::optional<double> gated_position(const std::vector<Pair>& pairs, bool anode, Distance d, std::size_t& gated) {
  double total = 0;
  gated = 0;
  for (const auto& [pred, gt] : pairs) {
    const auto& p = anode ? pred->anode : pred->cathode;
    const auto& g = anode ? gt->anode : gt->cathode;
    if (p.size() != g.size() || g.empty()) continue;
    const auto ps = sorted(p);
    const auto gs = sorted(g);
    double acc = 0;
    for (std::size_t j = 0; j < gs.size(); ++j) acc += point_distance(ps[j], gs[j], d);
    total += acc / static_cast<double>(gs.size());
    ++gated;
  }
  if (gated == 0) return std::nullopt;
  return total / static_cast<double>(gated);
}
}  // namespace

PositionMetrics position_metrics(const std::vector<Pair>& pairs, Distance d) {
  PositionMetrics m;
  m.al_mae = gated_position(pairs, true, d, m.al_gated);
  m.cl_mae = gated_position(pairs, false, d, m.cl_gated);
  return m;
}

OverhangMetric overhang_metric(const std::vector<Pair>& pairs, Distance d) {
  OverhangMetric m;
  double total = 0;
  for (const auto& [pred, gt] : pairs) {
    if (pred->anode.size() != gt->anode.size() || pred->cathode.size() != gt->cathode.size()) continue;
    if (gt->cathode.empty()) continue;
    if (gt->anode.size() < gt->cathode.size() + 1) {
      m.skipped.push_back(gt->id);
      continue;
    }
    const auto pa = sorted(pred->anode);
    const auto pc = sorted(pred->cathode);
    const auto ga = sorted(gt->anode);
    const auto gc = sorted(gt->cathode);
    double acc = 0;
    for (std::size_t j = 0; j < gc.size(); ++j) {
      const double sp = point_distance(pc[j], pa[j], d) + point_distance(pc[j], pa[j + 1], d);
      const double sg = point_distance(gc[j], ga[j], d) + point_distance(gc[j], ga[j + 1], d);
      acc += std::abs(sp - sg);
    }
    total += acc / static_cast<double>(gc.size());
    ++m.gated;
  }
  if (m.gated > 0) m.oh_mae = total / static_cast<double>(m.gated);
  return m;
}

MetricsReport compute_report(const std::vector<Pair>& pairs, const std::string& split, Distance d) {
  MetricsReport r;
  r.split = split;
  r.images = pairs.size();
  if (!pairs.empty()) {
    const CountMetrics c = count_metrics(pairs);
    r.an_mae = c.an_mae;
    r.cn_mae = c.cn_mae;
    r.an_acc = c.an_acc;
    r.cn_acc = c.cn_acc;
    r.pn_acc = c.pn_acc;
  }
  const PositionMetrics p = position_metrics(pairs, d);
  r.al_mae = p.al_mae;
  r.cl_mae = p.cl_mae;
  r.al_gated = p.al_gated;
  r.cl_gated = p.cl_gated;
  const OverhangMetric o = overhang_metric(pairs, d);
  r.oh_mae = o.oh_mae;
  r.oh_gated = o.gated;
  r.oh_skipped = o.skipped.size();
  return r;
}

const MetricsReport* Evaluation::find(const std::string& split) const {
  for (const auto& r : reports) {
    if (r.split == split) return &r;
  }
  return nullptr;
}

Evaluation evaluate(const std::vector<PredictionRecord>& preds, const std::vector<PredictionRecord>& gts,
                    const std::vector<synth::ManifestEntry>& entries, Distance d) {
  std::map<std::string, synth::Split> split_of;
  for (const auto& e : entries) split_of[e.id] = e.split;
  std::vector<PredictionRecord> wanted_gts;
  for (const auto& g : gts) {
    if (split_of.count(g.id)) wanted_gts.push_back(g);
  }
  if (wanted_gts.size() != split_of.size()) throw DataError("ground truth missing for some manifest entries");
  const std::vector<Pair> pairs = align(preds, wanted_gts);

  Evaluation ev;
  ev.distance = d;
  for (auto split : {synth::Split::Regular, synth::Split::Difficult, synth::Split::Tough}) {
    std::vector<Pair> subset;
    for (const auto& p : pairs) {
      if (split_of.at(p.gt->id) == split) subset.push_back(p);
    }
    ev.reports.push_back(compute_report(subset, std::string(synth::to_string(split)), d));
  }
  ev.reports.push_back(compute_report(pairs, "overall", d));
  for (const auto& id : overhang_metric(pairs, d).skipped) {
    ev.warnings.push_back("overhang skipped for " + id + ": fewer than n_cathode + 1 anodes");
  }
  return ev;
}

namespace {
json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}
}  // namespace

json to_json(const Evaluation& e) {
  json reports = json::array();
  for (const auto& r : e.reports) {
    reports.push_back({{"split", r.split},
                       {"images", r.images},
                       {"an_mae", opt(r.an_mae)},
                       {"cn_mae", opt(r.cn_mae)},
                       {"an_acc", opt(r.an_acc)},
                       {"cn_acc", opt(r.cn_acc)},
                       {"pn_acc", opt(r.pn_acc)},
                       {"al_mae", opt(r.al_mae)},
                       {"cl_mae", opt(r.cl_mae)},
                       {"oh_mae", opt(r.oh_mae)},
                       {"al_gated", r.al_gated},
                       {"cl_gated", r.cl_gated},
                       {"oh_gated", r.oh_gated},
                       {"oh_skipped", r.oh_skipped}});
  }
  return json{{"distance", to_string(e.distance)},
              {"overhang", "sum of the two cathode-anode distances, not halved"},
              {"pair_rule", "anode and cathode counts both exact"},
              {"reports", reports},
              {"warnings", e.warnings}};
}

Evaluation evaluation_from_json(const json& doc) {
  try {
    Evaluation e;
    e.distance = parse_distance(doc.at("distance").get<std::string>());
    for (const auto& r : doc.at("reports")) {
      MetricsReport m;
      m.split = r.at("split").get<std::string>();
      m.images = r.at("images").get<std::size_t>();
      m.an_mae = opt_from(r, "an_mae");
      m.cn_mae = opt_from(r, "cn_mae");
      m.an_acc = opt_from(r, "an_acc");
      m.cn_acc = opt_from(r, "cn_acc");
      m.pn_acc = opt_from(r, "pn_acc");
      m.al_mae = opt_from(r, "al_mae");
      m.cl_mae = opt_from(r, "cl_mae");
      m.oh_mae = opt_from(r, "oh_mae");
      m.al_gated = r.at("al_gated").get<std::size_t>();
      m.cl_gated = r.at("cl_gated").get<std::size_t>();
      m.oh_gated = r.at("oh_gated").get<std::size_t>();
      m.oh_skipped = r.at("oh_skipped").get<std::size_t>();
      e.reports.push_back(m);
    }
    e.warnings = doc.value("warnings", std::vector<std::string>{});
    return e;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed metrics report: ") + ex.what());
  }
}

std::string format_table(const Evaluation& e, const std::string& method) {
  static const char* kHeads[] = {"AN-MAE", "CN-MAE", "AN-ACC", "CN-ACC", "PN-ACC", "AL-MAE", "CL-MAE", "OH-MAE"};
  std::ostringstream os;
  char buf[64];
  const std::string label = method.empty() ? "split" : method;
  std::snprintf(buf, sizeof(buf), "%-12s %6s", label.c_str(), "images");
  os << buf;
  for (const char* h : kHeads) {
    std::snprintf(buf, sizeof(buf), " %8s", h);
    os << buf;
  }
  os << '\n';
  for (const auto& r : e.reports) {
    std::snprintf(buf, sizeof(buf), "%-12s %6zu", r.split.c_str(), r.images);
    os << buf;
    for (const auto* v : {&r.an_mae, &r.cn_mae, &r.an_acc, &r.cn_acc, &r.pn_acc, &r.al_mae, &r.cl_mae, &r.oh_mae}) {
      if (*v) {
        std::snprintf(buf, sizeof(buf), " %8.4f", **v);
        os << buf;
      } else {
        os << "        —";
      }
    }
    os << '\n';
  }
  os << "distance: " << to_string(e.distance) << '\n';
  return os.str();
}

}  // namespace pbd::metrics
