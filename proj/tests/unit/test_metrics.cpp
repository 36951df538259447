// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracle/brute_metrics.hpp"
#include "pbd/error.hpp"
#include "pbd/metrics/metrics.hpp"
#include "pbd/random.hpp"

using namespace pbd;
using namespace pbd::metrics;

namespace {

PredictionRecord rec(const std::string& id, std::vector<PointD> a, std::vector<PointD> c) {
  PredictionRecord r;
  r.id = id;
  r.n_anode = static_cast<int>(a.size());
  r.n_cathode = static_cast<int>(c.size());
  r.anode = std::move(a);
  r.cathode = std::move(c);
  return r;
}

std::vector<PointD> column(std::initializer_list<double> ys, double x0 = 0) {
  std::vector<PointD> v;
  double x = x0;
  for (double y : ys) v.push_back({x++, y});
  return v;
}

struct RandomCase {
  std::vector<PredictionRecord> preds, gts;
  std::vector<oracle::Instance> instances;
};

// Small instances where counts often match, so every gate gets exercised.
RandomCase random_case(std::uint64_t seed) {
  Rng rng(seed);
  RandomCase rc;
  const int images = rng.uniform_int(1, 5);
  for (int i = 0; i < images; ++i) {
    const int na = rng.uniform_int(0, 8);
    const int nc = std::max(0, na - 1 - (rng.uniform() < 0.15 ? 1 : 0));
    auto pts = [&](int n) {
      std::vector<PointD> v;
      for (int k = 0; k < n; ++k) v.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
      return v;
    };
    auto jitter = [&](std::vector<PointD> v) {
      for (auto& p : v) {
        p.x += rng.normal();
        p.y += rng.normal();
      }
      if (rng.uniform() < 0.25 && !v.empty()) v.pop_back();
      if (rng.uniform() < 0.15) v.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
      std::reverse(v.begin(), v.end());  // unsorted input must be canonicalised
      return v;
    };
    const auto ga = pts(na), gc = pts(nc);
    const auto pa = jitter(ga), pc = jitter(gc);
    const std::string id = "img" + std::to_string(i);
    rc.gts.push_back(rec(id, ga, gc));
    rc.preds.push_back(rec(id, pa, pc));
    auto conv = [](const std::vector<PointD>& v) {
      std::vector<oracle::Pt> o;
      for (const auto& p : v) o.push_back({p.x, p.y});
      return o;
    };
    rc.instances.push_back({conv(pa), conv(pc), conv(ga), conv(gc)});
  }
  return rc;
}

void check_close(const std::optional<double>& a, const std::optional<double>& b) {
  REQUIRE(a.has_value() == b.has_value());
  if (a) CHECK(std::abs(*a - *b) <= 1e-9);
}

}  // namespace

TEST_CASE("count metrics hand example") {
  const std::vector<PredictionRecord> p = {rec("a", column({0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), column({0, 0, 0, 0, 0, 0, 0, 0, 0})),
                                           rec("b", column({0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), column({0, 0, 0, 0, 0, 0, 0, 0, 0}))};
  const std::vector<PredictionRecord> g = {rec("a", column({0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), column({0, 0, 0, 0, 0, 0, 0, 0, 0})),
                                           rec("b", column({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), column({0, 0, 0, 0, 0, 0, 0, 0, 0}))};
  // Predicted anode counts (10, 10) against (10, 11).
  const CountMetrics m = count_metrics(align(p, g));
  CHECK(m.an_mae == 0.5);
  CHECK(m.an_acc == 0.5);
  CHECK(m.cn_acc == 1.0);
  CHECK(m.pn_acc == 0.5);

  const CountMetrics perfect = count_metrics(align(g, g));
  CHECK(perfect.an_mae == 0);
  CHECK(perfect.pn_acc == 1);

  // Anode right, cathode wrong everywhere.
  const std::vector<PredictionRecord> q = {rec("a", g[0].anode, {}), rec("b", g[1].anode, {})};
  const CountMetrics w = count_metrics(align(q, g));
  CHECK(w.an_acc == 1.0);
  CHECK(w.pn_acc == 0.0);
}

TEST_CASE("position metrics") {
  const auto gt = rec("i", {{10, 10}, {20, 10}}, {});
  const auto off = rec("i", {{13, 14}, {23, 14}}, {});
  const PositionMetrics m = position_metrics(align({off}, {gt}));
  CHECK(*m.al_mae == doctest::Approx(5.0));
  CHECK_FALSE(m.cl_mae.has_value());  // zero cathodes: nothing to score
  CHECK(*position_metrics(align({gt}, {gt})).al_mae == 0.0);
  CHECK(*position_metrics(align({off}, {gt}), Distance::Vertical).al_mae == doctest::Approx(4.0));

  const auto miss = rec("i", {{13, 14}}, {});
  CHECK_FALSE(position_metrics(align({miss}, {gt})).al_mae.has_value());
}

TEST_CASE("overhang hand example") {
  const auto gt = rec("i", {{0, 0}, {2, 10}, {4, 20}}, {{1, 5}, {3, 15}});
  const auto pred = rec("i", {{0, 1}, {2, 10}, {4, 20}}, {{1, 5}, {3, 15}});
  CHECK(*overhang_metric(align({pred}, {gt}), Distance::Vertical).oh_mae == doctest::Approx(0.5));
  CHECK(*overhang_metric(align({gt}, {gt})).oh_mae == 0.0);

  // 1-D: a cathode anywhere strictly between its anodes gives the same sum.
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const double a1 = rng.uniform(0, 50), a2 = a1 + rng.uniform(0.1, 50);
    const double c1 = rng.uniform(a1, a2), c2 = rng.uniform(a1, a2);
    const auto g = rec("j", {{0, a1}, {2, a2}}, {{1, c1}});
    const auto p = rec("j", {{0, a1}, {2, a2}}, {{1, c2}});
    CHECK(*overhang_metric(align({p}, {g}), Distance::Vertical).oh_mae == doctest::Approx(0.0).epsilon(1e-12));
  }

  // Degenerate ordering: skipped with a record of the id.
  const auto bad = rec("k", {{0, 0}}, {{1, 5}, {3, 6}});
  const OverhangMetric o = overhang_metric(align({bad}, {bad}));
  CHECK_FALSE(o.oh_mae.has_value());
  REQUIRE(o.skipped.size() == 1);
  CHECK(o.skipped[0] == "k");
}

TEST_CASE("alignment errors list ids") {
  const auto a = rec("a", {}, {});
  const auto b = rec("b", {}, {});
  try {
    align({a}, {b});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a") != std::string::npos);
    CHECK(msg.find("b") != std::string::npos);
  }
}

TEST_CASE("oracle equivalence on random instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RandomCase rc = random_case(seed);
    for (bool vertical : {false, true}) {
      const MetricsReport r = compute_report(align(rc.preds, rc.gts), "x", vertical ? Distance::Vertical : Distance::Euclidean);
      const oracle::Result o = oracle::evaluate(rc.instances, vertical);
      check_close(r.an_mae, o.an_mae);
      check_close(r.cn_mae, o.cn_mae);
      check_close(r.an_acc, o.an_acc);
      check_close(r.cn_acc, o.cn_acc);
      check_close(r.pn_acc, o.pn_acc);
      check_close(r.al_mae, o.al_mae);
      check_close(r.cl_mae, o.cl_mae);
      check_close(r.oh_mae, o.oh_mae);
    }
  }
}

TEST_CASE("metric properties") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    RandomCase rc = random_case(seed);
    const MetricsReport r = compute_report(align(rc.preds, rc.gts), "x");
    CHECK(*r.pn_acc <= std::min(*r.an_acc, *r.cn_acc));

    // Image order and point order do not matter.
    std::reverse(rc.preds.begin(), rc.preds.end());
    for (auto& p : rc.preds) std::reverse(p.anode.begin(), p.anode.end());
    const MetricsReport shuffled = compute_report(align(rc.preds, rc.gts), "x");
    check_close(shuffled.an_mae, r.an_mae);
    check_close(shuffled.pn_acc, r.pn_acc);
    check_close(shuffled.al_mae, r.al_mae);
    check_close(shuffled.cl_mae, r.cl_mae);
    check_close(shuffled.oh_mae, r.oh_mae);
    CHECK(shuffled.oh_gated == r.oh_gated);

    // Translating everything leaves all values unchanged.
    auto shift = [](std::vector<PredictionRecord> v) {
      for (auto& x : v) {
        for (auto& p : x.anode) p = {p.x + 17.0, p.y - 3.0};
        for (auto& p : x.cathode) p = {p.x + 17.0, p.y - 3.0};
      }
      return v;
    };
    const auto sp = shift(rc.preds);
    const auto sg = shift(rc.gts);
    const MetricsReport t = compute_report(align(sp, sg), "x");
    if (r.oh_mae) CHECK(*t.oh_mae == doctest::Approx(*r.oh_mae).epsilon(1e-9));
    if (r.al_mae) CHECK(*t.al_mae == doctest::Approx(*r.al_mae).epsilon(1e-9));
    if (r.cl_mae) CHECK(*t.cl_mae == doctest::Approx(*r.cl_mae).epsilon(1e-9));
  }
}

TEST_CASE("evaluate per split and serialisation") {
  const RandomCase rc = random_case(7);
  std::vector<synth::ManifestEntry> entries;
  for (const auto& g : rc.gts) entries.push_back({g.id, "", "", synth::Split::Difficult, synth::Subset::Test});
  const Evaluation ev = evaluate(rc.preds, rc.gts, entries);
  REQUIRE(ev.reports.size() == 4);
  CHECK(ev.find("regular")->images == 0);
  CHECK_FALSE(ev.find("regular")->an_mae.has_value());
  MetricsReport d = *ev.find("difficult");
  MetricsReport o = ev.overall();
  d.split = o.split = "";
  CHECK(d == o);

  const Evaluation back = evaluation_from_json(json::parse(to_json(ev).dump()));
  CHECK(back == ev);
  const std::string table = format_table(ev);
  CHECK(table.find("PN-ACC") != std::string::npos);
  CHECK(table.find("—") != std::string::npos);
  CHECK(evaluate(rc.preds, rc.gts, entries) == ev);
}
