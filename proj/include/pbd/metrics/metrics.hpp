// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pbd/json_io.hpp"
#include "pbd/post/postproc.hpp"
#include "pbd/synth/dataset.hpp"

namespace pbd::metrics {

using post::PointD;
using post::PredictionRecord;

enum class Distance { Euclidean, Vertical };
std::string_view to_string(Distance d);
Distance parse_distance(std::string_view s);

double point_distance(const PointD& a, const PointD& b, Distance d);

/// A prediction paired with its ground truth (same image id).
struct Pair {
  const PredictionRecord* pred;
  const PredictionRecord* gt;
};

/// Pairs by id. Throws DataError naming ids present on one side only.
std::vector<Pair> align(const std::vector<PredictionRecord>& preds, const std::vector<PredictionRecord>& gts);

struct CountMetrics {
  double an_mae = 0;
  double cn_mae = 0;
  double an_acc = 0;
  double cn_acc = 0;
  double pn_acc = 0;
};

struct PositionMetrics {
  std::optional<double> al_mae;
  std::optional<double> cl_mae;
  std::size_t al_gated = 0;
  std::size_t cl_gated = 0;
};

struct OverhangMetric {
  std::optional<double> oh_mae;
  std::size_t gated = 0;
  std::vector<std::string> skipped;  // pair-gated images lacking n_cathode + 1 anodes
};

CountMetrics count_metrics(const std::vector<Pair>& pairs);
PositionMetrics position_metrics(const std::vector<Pair>& pairs, Distance d = Distance::Euclidean);
OverhangMetric overhang_metric(const std::vector<Pair>& pairs, Distance d = Distance::Euclidean);

struct MetricsReport {
  std::string split;
  std::size_t images = 0;
  std::optional<double> an_mae, cn_mae, an_acc, cn_acc, pn_acc, al_mae, cl_mae, oh_mae;
  std::size_t al_gated = 0;
  std::size_t cl_gated = 0;
  std::size_t oh_gated = 0;
  std::size_t oh_skipped = 0;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport compute_report(const std::vector<Pair>& pairs, const std::string& split, Distance d = Distance::Euclidean);

/// Reports for regular, difficult, tough and overall, in that order.
struct Evaluation {
  Distance distance = Distance::Euclidean;
  std::vector<MetricsReport> reports;
  std::vector<std::string> warnings;
  friend bool operator==(const Evaluation&, const Evaluation&) = default;

  const MetricsReport& overall() const { return reports.back(); }
  const MetricsReport* find(const std::string& split) const;
};

/// `gts` must cover every manifest entry being evaluated; only images listed
/// in `entries` are scored.
Evaluation evaluate(const std::vector<PredictionRecord>& preds, const std::vector<PredictionRecord>& gts,
                    const std::vector<synth::ManifestEntry>& entries, Distance d = Distance::Euclidean);

json to_json(const Evaluation& e);
Evaluation evaluation_from_json(const json& doc);

/// Aligned text table; unavailable cells print as an em dash.
std::string format_table(const Evaluation& e, const std::string& method = "");

}  // namespace pbd::metrics
