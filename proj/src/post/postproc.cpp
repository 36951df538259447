// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/post/postproc.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <fstream>

#include "pbd/error.hpp"

namespace pbd::post {

void sort_points(std::vector<PointD>& pts) {
  std::sort(pts.begin(), pts.end(), [](const PointD& a, const PointD& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
}

BinaryMask binarize(const FloatImage& map, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ContractError("binarize: threshold must lie in [0, 1]");
  BinaryMask out(map.height, map.width);
  for (std::size_t i = 0; i < map.pixels.size(); ++i) out.pixels[i] = map.pixels[i] >= threshold ? 1 : 0;
  return out;
}

std::vector<PointD> extract_endpoints(const BinaryMask& mask, int min_area) {
  const Components comps = label_components(mask);
  struct Box {
    int x0 = INT_MAX, y0 = INT_MAX, x1 = INT_MIN, y1 = INT_MIN;
  };
  std::vector<Box> boxes(comps.count);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const int label = comps.labels[static_cast<std::size_t>(y) * mask.width + x];
      if (label == 0) continue;
      Box& b = boxes[label - 1];
      b.x0 = std::min(b.x0, x);
      b.x1 = std::max(b.x1, x);
      b.y0 = std::min(b.y0, y);
      b.y1 = std::max(b.y1, y);
    }
  }
  std::vector<PointD> pts;
  for (int i = 0; i < comps.count; ++i) {
    if (comps.areas[i] < min_area) continue;
    pts.push_back(PointD{0.5 * (boxes[i].x0 + boxes[i].x1), 0.5 * (boxes[i].y0 + boxes[i].y1)});
  }
  sort_points(pts);
  return pts;
}

FloatImage channel_image(const nn::Tensor& t, int n, int c) {
  const auto s = t.shape();
  if (n < 0 || n >= s.n || c < 0 || c >= s.c) throw ContractError("channel_image: index outside " + s.str());
  FloatImage img(s.h, s.w);
  auto d = t.data();
  std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(t.offset(n, c, 0, 0)), img.pixels.size(), img.pixels.begin());
  return img;
}

namespace {
PredictionRecord make_record(const std::string& id, std::vector<PointD> anode, std::vector<PointD> cathode) {
  PredictionRecord r;
  r.id = id;
  sort_points(anode);
  sort_points(cathode);
  r.n_anode = static_cast<int>(anode.size());
  r.n_cathode = static_cast<int>(cathode.size());
  r.anode = std::move(anode);
  r.cathode = std::move(cathode);
  return r;
}
}  // namespace

PredictionRecord masks_to_record(const labels::MaskPair& masks, const std::string& id, int min_area) {
  return make_record(id, extract_endpoints(masks.anode, min_area), extract_endpoints(masks.cathode, min_area));
}

PredictionRecord to_record(const model::ForwardOutputs& out, const std::string& id, const PostprocOptions& opts,
                           int batch_index) {
  auto points = [&](int c) {
    return extract_endpoints(binarize(channel_image(out.point, batch_index, c), opts.threshold), opts.min_area);
  };
  return make_record(id, points(0), points(1));
}

PredictionRecord scene_record(const synth::BatteryScene& scene, const std::string& id) {
  auto convert = [](const std::vector<synth::Point>& pts) {
    std::vector<PointD> out;
    for (const auto& p : pts) out.push_back(PointD{static_cast<double>(p.x), static_cast<double>(p.y)});
    return out;
  };
  return make_record(id, convert(scene.anode), convert(scene.cathode));
}

json to_json(const PredictionRecord& r) {
  auto pts = [](const std::vector<PointD>& v) {
    json arr = json::array();
    for (const auto& p : v) arr.push_back({p.x, p.y});
    return arr;
  };
  return json{{"id", r.id}, {"anode", pts(r.anode)}, {"cathode", pts(r.cathode)}, {"n_anode", r.n_anode},
              {"n_cathode", r.n_cathode}};
}

PredictionRecord record_from_json(const json& doc) {
  try {
    auto pts = [](const json& arr) {
      std::vector<PointD> v;
      for (const auto& p : arr) v.push_back(PointD{p.at(0).get<double>(), p.at(1).get<double>()});
      return v;
    };
    PredictionRecord r = make_record(doc.at("id").get<std::string>(), pts(doc.at("anode")), pts(doc.at("cathode")));
    if (doc.contains("n_anode") && doc.at("n_anode").get<int>() != r.n_anode) {
      throw DataError("record " + r.id + ": n_anode disagrees with the anode list");
    }
    if (doc.contains("n_cathode") && doc.at("n_cathode").get<int>() != r.n_cathode) {
      throw DataError("record " + r.id + ": n_cathode disagrees with the cathode list");
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed prediction record: ") + e.what());
  }
}

void write_records_jsonl(const std::filesystem::path& path, const std::vector<PredictionRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  for (const auto& r : records) os << to_json(r).dump() << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

namespace {

void draw_line(RgbImage& img, PointD a, PointD b, std::uint8_t r, std::uint8_t g) {
  int x0 = static_cast<int>(std::lround(a.x)), y0 = static_cast<int>(std::lround(a.y));
  const int x1 = static_cast<int>(std::lround(b.x)), y1 = static_cast<int>(std::lround(b.y));
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (x0 >= 0 && y0 >= 0 && x0 < img.width && y0 < img.height) img.set(x0, y0, r, g, 0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_dot(RgbImage& img, PointD p, std::uint8_t r, std::uint8_t g) {
  const int cx = static_cast<int>(std::lround(p.x)), cy = static_cast<int>(std::lround(p.y));
  for (auto [dx, dy] : {std::pair{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
    const int x = cx + dx, y = cy + dy;
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, r, g, 0);
  }
}

}  // namespace

RgbImage overlay(const GrayImage& image, const PredictionRecord& record, bool lines) {
  RgbImage out(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) out.set(x, y, image(x, y), image(x, y), image(x, y));
  }
  if (lines) {
    for (std::size_t i = 1; i < record.anode.size(); ++i) draw_line(out, record.anode[i - 1], record.anode[i], 150, 0);
    for (std::size_t i = 1; i < record.cathode.size(); ++i) draw_line(out, record.cathode[i - 1], record.cathode[i], 0, 150);
  }
  for (const auto& p : record.anode) draw_dot(out, p, 255, 0);
  for (const auto& p : record.cathode) draw_dot(out, p, 0, 255);
  return out;
}

std::vector<PredictionRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open records: " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pbd::post
