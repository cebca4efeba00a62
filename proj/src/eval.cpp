// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vtd/errors.hpp"

namespace vtd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  if (s == "-inf" || s == "-Inf" || s == "-INF") return -kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": not a number: '" + s + "'");
  }
}

}  // namespace

DetCurve det_curve(const std::vector<ScoredSegment>& segments, double negative_hours) {
  if (!(negative_hours > 0.0)) throw ConfigError("negative_hours must be positive");
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : segments) {
    if (std::isnan(s.score) || s.score == kInf)
      throw DataError("segment " + s.id + " has a NaN or +inf score");
    (s.positive ? n_pos : n_neg)++;
  }
  if (n_pos == 0) throw DataError("DET curve needs at least one positive segment");
  if (n_neg == 0) throw DataError("DET curve needs at least one negative segment");

  std::vector<const ScoredSegment*> sorted;
  for (const auto& s : segments) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredSegment* a, const ScoredSegment* b) { return a->score > b->score; });

  DetCurve curve;
  curve.total_negative_hours = negative_hours;
  curve.points.push_back({kInf, 0.0, 1.0});
  std::size_t accepted_pos = 0, accepted_neg = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double theta = sorted[i]->score;
    for (; i < sorted.size() && sorted[i]->score == theta; ++i)
      (sorted[i]->positive ? accepted_pos : accepted_neg)++;
    curve.points.push_back({theta, accepted_neg / negative_hours,
                            static_cast<double>(n_pos - accepted_pos) / n_pos});
  }
  if (curve.points.back().threshold != -kInf)
    curve.points.push_back({-kInf, n_neg / negative_hours, 0.0});
  return curve;
}

double negative_hours(const std::vector<ScoredSegment>& segments) {
  double s = 0.0;
  for (const auto& seg : segments)
    if (!seg.positive) s += seg.duration_s;
  return s / 3600.0;
}

double fr_at_fa(const DetCurve& curve, double fa_target) {
  if (fa_target < 0.0) throw ConfigError("FA target must be >= 0");
  double best = kInf;
  for (const auto& p : curve.points)
    if (p.fa_per_hour <= fa_target) best = std::min(best, p.fr_proportion);
  return best;
}

std::vector<ScoredSegment> read_scored_segments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ScoredSegment> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("id,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 4) throw DataError(where + ": expected 4 fields");
    ScoredSegment s;
    s.id = f[0];
    s.score = parse_double(f[1], where);
    if (f[2] == "1" || f[2] == "positive" || f[2] == "true")
      s.positive = true;
    else if (f[2] == "0" || f[2] == "negative" || f[2] == "false")
      s.positive = false;
    else
      throw DataError(where + ": bad label '" + f[2] + "'");
    s.duration_s = parse_double(f[3], where);
    if (!(s.duration_s >= 0.0)) throw DataError(where + ": negative duration");
    out.push_back(std::move(s));
  }
  return out;
}

void write_scored_segments(const std::filesystem::path& path,
                           const std::vector<ScoredSegment>& segments) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "id,score,label,duration_s\n";
  for (const auto& s : segments)
    out << s.id << ',' << fmt(s.score) << ',' << (s.positive ? 1 : 0) << ','
        << fmt(s.duration_s) << '\n';
}

void write_det_csv(const std::filesystem::path& path, const DetCurve& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "threshold,fa_per_hour,fr_proportion\n";
  for (const auto& p : curve.points)
    out << fmt(p.threshold) << ',' << fmt(p.fa_per_hour) << ',' << fmt(p.fr_proportion)
        << '\n';
}

void write_det_svg(const std::filesystem::path& path,
                   const std::vector<LabeledCurve>& curves) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#e5b800", "#9467bd",
                                  "#2ca02c", "#8c564b", "#17becf"};
  constexpr double kW = 640, kH = 440, kLeft = 70, kRight = 180, kTop = 30, kBottom = 60;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;

  double fa_min = kInf, fa_max = 0.0;
  for (const auto& c : curves)
    for (const auto& p : c.curve.points)
      if (p.fa_per_hour > 0.0) {
        fa_min = std::min(fa_min, p.fa_per_hour);
        fa_max = std::max(fa_max, p.fa_per_hour);
      }
  if (fa_max == 0.0) fa_min = 0.1, fa_max = 10.0;
  const double lo = std::floor(std::log10(fa_min)), hi = std::ceil(std::log10(fa_max));
  const double span = std::max(hi - lo, 1.0);
  auto x_of = [&](double fa) {
    const double v = fa > 0.0 ? std::log10(fa) : lo;
    return kLeft + pw * (std::clamp(v, lo, lo + span) - lo) / span;
  };
  auto y_of = [&](double fr) { return kTop + ph * (1.0 - fr); };

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = lo; e <= lo + span + 1e-9; e += 1.0) {
    const double x = x_of(std::pow(10.0, e));
    out << "<line x1=\"" << x << "\" y1=\"" << kTop << "\" x2=\"" << x << "\" y2=\""
        << kTop + ph << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << kTop + ph + 16
        << "\" text-anchor=\"middle\">1e" << static_cast<int>(e) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double fr = i / 4.0;
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << y_of(fr) + 4
        << "\" text-anchor=\"end\">" << fr << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15
      << "\" text-anchor=\"middle\">false alarms per hour</text>\n";
  out << "<text transform=\"translate(18," << kTop + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">false reject proportion</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kColors[c % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves[c].curve.points)
      out << x_of(p.fa_per_hour) << ',' << y_of(p.fr_proportion) << ' ';
    out << "\"/>\n";
    const double ly = kTop + 16.0 * (c + 1);
    out << "<line x1=\"" << kW - kRight + 10 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << kW - kRight + 30 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kW - kRight + 35 << "\" y=\"" << ly << "\">" << xml_escape(curves[c].label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace vtd
