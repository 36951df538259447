// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pbd/post/postproc.hpp"
#include "pbd/raster.hpp"

namespace pbd::corners {

struct Gradients {
  FloatImage ix;
  FloatImage iy;
};

/// 3x3 Sobel responses with replicated borders.
Gradients sobel_gradients(const FloatImage& image);
FloatImage to_float(const GrayImage& image);

struct CornerOptions {
  int window = 5;           // odd; Gaussian sigma = window / 6
  int nms_radius = 3;
  double threshold_rel = 0.01;
  double k = 0.04;          // Harris only
  bool edge_prefilter = true;
  double edge_percentile = 0.8;
};

/// Per-pixel corner scores before thresholding.
FloatImage harris_response(const FloatImage& image, double k, int window);
FloatImage shi_tomasi_response(const FloatImage& image, int window);

/// Zeroes scores wherever the Sobel magnitude is at or below the given
/// percentile of all magnitudes.
void apply_edge_prefilter(FloatImage& score, const FloatImage& image, double percentile);

/// Strict local maxima above threshold_rel * max, kept greedily by
/// descending score so that survivors are more than `radius` apart.
std::vector<post::PointD> select_peaks(const FloatImage& score, double threshold_rel, int radius);

std::vector<post::PointD> harris(const FloatImage& image, const CornerOptions& opts = {});
std::vector<post::PointD> shi_tomasi(const FloatImage& image, const CornerOptions& opts = {});

struct RefinedCorner {
  post::PointD p;
  bool refined = false;  // false when at the border or the system was singular
};

struct RefineOptions {
  int half_window = 5;
  int max_iterations = 40;
  double epsilon = 1e-3;
};

/// Gradient-orthogonality refinement: q solves sum(g g^T) q = sum(g g^T) p
/// over the window around the current estimate.
std::vector<RefinedCorner> subpixel_refine(const FloatImage& image, const std::vector<post::PointD>& corners,
                                           const RefineOptions& opts = {});

/// Corners carry no polarity, so every corner goes to both lists.
post::PredictionRecord corners_to_record(const std::vector<post::PointD>& corners, const std::string& id);

}  // namespace pbd::corners
