// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vtd {

struct ScoredSegment {
  std::string id;
  double score = 0.0;  // finite or -inf
  bool positive = false;
  double duration_s = 0.0;
};

struct DetPoint {
  double threshold;
  double fa_per_hour;
  double fr_proportion;
};

/// Operating points for the rule "accept iff score >= threshold", ordered by
/// strictly decreasing threshold: +inf first, then every distinct score,
/// ending at -inf. FR is non-increasing and FA/h non-decreasing along it.
struct DetCurve {
  std::vector<DetPoint> points;
  double total_negative_hours = 0.0;
};

DetCurve det_curve(const std::vector<ScoredSegment>& segments, double negative_hours);

/// Hours of negative audio: sum of negative durations / 3600.
double negative_hours(const std::vector<ScoredSegment>& segments);

/// Smallest FR over points with fa_per_hour <= fa_target (no interpolation);
/// +inf when no point qualifies.
double fr_at_fa(const DetCurve& curve, double fa_target);

// CSV with header "id,score,label,duration_s"; label is 1/0 or
// positive/negative.
std::vector<ScoredSegment> read_scored_segments(const std::filesystem::path& path);
void write_scored_segments(const std::filesystem::path& path,
                           const std::vector<ScoredSegment>& segments);

/// CSV "threshold,fa_per_hour,fr_proportion".
void write_det_csv(const std::filesystem::path& path, const DetCurve& curve);

struct LabeledCurve {
  std::string label;
  DetCurve curve;
};

/// DET plot: FA/hour on a log10 x-axis, FR proportion on the y-axis.
void write_det_svg(const std::filesystem::path& path,
                   const std::vector<LabeledCurve>& curves);

}  // namespace vtd
