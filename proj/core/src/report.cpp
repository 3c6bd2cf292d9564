/*
 * Copyright 2026 The icurisk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "icurisk/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace icurisk {

namespace {

// Full-precision decimal form; parses back to the identical double.
std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void check_map(const AttributionMap& map) {
  if (map.contributions.rank() != 2) {
    throw std::invalid_argument("report: attribution map must hold a [channels, time] grid");
  }
}

}  // namespace

PredictorSummary marginal_importance(const AttributionMap& map, const FeatureCatalog& catalog) {
  check_map(map);
  const std::size_t C = map.contributions.size(0);
  if (C != catalog.size()) {
    throw std::invalid_argument("marginal_importance: map has " + std::to_string(C) +
                                " channels, catalog has " + std::to_string(catalog.size()));
  }
  const std::vector<PosNegSums> sums = pos_neg_split(map);

  double normalizer = 0.0;
  for (const PosNegSums& s : sums) normalizer += std::abs(s.positive + s.negative);

  PredictorSummary out;
  out.patient_id = map.patient_id;
  out.predicted_probability =
      map.target == OutputTarget::kLogit ? sigmoid(map.actual_output) : map.actual_output;
  out.normalizer = normalizer;
  out.predictors.resize(C);
  const double inv = normalizer > 0.0 ? 1.0 / normalizer : 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    PredictorImportance& p = out.predictors[c];
    p.name = catalog.at(c).name;
    p.positive = sums[c].positive * inv;
    p.negative = sums[c].negative * inv;
    p.net = p.positive + p.negative;  // exact by construction
  }
  return out;
}

std::vector<PosNegSums> pos_neg_split(const AttributionMap& map) {
  check_map(map);
  const std::size_t C = map.contributions.size(0), T = map.contributions.size(1);
  std::vector<PosNegSums> sums(C);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      const double v = map.contributions.at(c, t);
      (v > 0.0 ? sums[c].positive : sums[c].negative) += v;
    }
  }
  return sums;
}

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  const double frac = h - static_cast<double>(lo);
  return x[lo] + frac * (x[lo + 1] - x[lo]);
}

namespace {

BoxStats box_stats(std::span<const double> values) {
  BoxStats b;
  b.median = quantile(values, 0.5);
  b.q1 = quantile(values, 0.25);
  b.q3 = quantile(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q3;
  b.whisker_high = b.q1;
  bool any = false;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) continue;
    if (!any) {
      b.whisker_low = b.whisker_high = v;
      any = true;
    } else {
      b.whisker_low = std::min(b.whisker_low, v);
      b.whisker_high = std::max(b.whisker_high, v);
    }
  }
  return b;
}

}  // namespace

DatasetImportanceStats dataset_importance(std::span<const AttributionMap> maps,
                                          std::span<const int> labels,
                                          const FeatureCatalog& catalog) {
  if (maps.size() != labels.size()) {
    throw std::invalid_argument("dataset_importance: maps and labels differ in length");
  }
  const std::size_t C = catalog.size();
  std::array<std::vector<std::vector<double>>, 2> pos_values, neg_values;
  for (int cls = 0; cls < 2; ++cls) {
    pos_values[cls].resize(C);
    neg_values[cls].resize(C);
  }

  DatasetImportanceStats stats;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const int cls = labels[i];
    if (cls != 0 && cls != 1) throw std::invalid_argument("dataset_importance: labels must be 0/1");
    const PredictorSummary summary = marginal_importance(maps[i], catalog);
    ++stats.class_counts[cls];
    for (std::size_t c = 0; c < C; ++c) {
      pos_values[cls][c].push_back(summary.predictors[c].positive);
      neg_values[cls][c].push_back(summary.predictors[c].negative);
    }
  }
  for (int cls = 0; cls < 2; ++cls) {
    if (stats.class_counts[cls] < 5) {
      throw std::invalid_argument("dataset_importance: class " + std::to_string(cls) + " has " +
                                  std::to_string(stats.class_counts[cls]) +
                                  " patients, need at least 5");
    }
  }
  for (int cls = 0; cls < 2; ++cls) {
    stats.positive[cls].resize(C);
    stats.negative[cls].resize(C);
    for (std::size_t c = 0; c < C; ++c) {
      stats.positive[cls][c] = box_stats(pos_values[cls][c]);
      stats.negative[cls][c] = box_stats(neg_values[cls][c]);
    }
  }
  return stats;
}

RenderFormat parse_render_format(const std::string& name) {
  if (name == "json") return RenderFormat::kJson;
  if (name == "csv") return RenderFormat::kCsv;
  if (name == "svg") return RenderFormat::kSvg;
  throw std::invalid_argument("unknown render format '" + name + "' (expected json, csv or svg)");
}

// ---------------------------------------------------------------------------
// SVG helpers

namespace {

// Diverging scale: red for positive (death evidence), blue for negative
// (survival evidence), neutral gray at zero, anchored at +-anchor.
std::string diverging_color(double value, double anchor) {
  if (anchor <= 0.0 || value == 0.0) return "#f7f7f7";
  const double t = std::clamp(std::abs(value) / anchor, 0.0, 1.0);
  const int nr = 247, ng = 247, nb = 247;
  int r, g, b;
  if (value > 0.0) {
    r = nr + static_cast<int>(std::lround((178 - nr) * t));
    g = ng + static_cast<int>(std::lround((24 - ng) * t));
    b = nb + static_cast<int>(std::lround((43 - nb) * t));
  } else {
    r = nr + static_cast<int>(std::lround((33 - nr) * t));
    g = ng + static_cast<int>(std::lround((102 - ng) * t));
    b = nb + static_cast<int>(std::lround((172 - nb) * t));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string svg_header(int width, int height) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  return os.str();
}

std::string svg_text(int x, int y, const std::string& text, const char* anchor = "start") {
  std::ostringstream os;
  os << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor << "\">" << text
     << "</text>\n";
  return os.str();
}

std::string svg_rect(double x, double y, double w, double h, const std::string& fill) {
  std::ostringstream os;
  os << "<rect x=\"" << fmt_short(x) << "\" y=\"" << fmt_short(y) << "\" width=\"" << fmt_short(w)
     << "\" height=\"" << fmt_short(h) << "\" fill=\"" << fill << "\"/>\n";
  return os.str();
}

std::string svg_line(double x1, double y1, double x2, double y2, const std::string& stroke) {
  std::ostringstream os;
  os << "<line x1=\"" << fmt_short(x1) << "\" y1=\"" << fmt_short(y1) << "\" x2=\"" << fmt_short(x2)
     << "\" y2=\"" << fmt_short(y2) << "\" stroke=\"" << stroke << "\"/>\n";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Marginal importance

std::string render_marginal(const PredictorSummary& summary, RenderFormat format) {
  if (format == RenderFormat::kJson) {
    nlohmann::json j;
    j["kind"] = "marginal";
    j["patient_id"] = summary.patient_id;
    j["predicted_probability"] = summary.predicted_probability;
    j["normalizer"] = summary.normalizer;
    j["normalization"] = "l1_of_net_sums";
    nlohmann::json rows = nlohmann::json::array();
    for (const PredictorImportance& p : summary.predictors) {
      rows.push_back({{"feature", p.name}, {"net", p.net}, {"positive", p.positive},
                      {"negative", p.negative}});
    }
    j["predictors"] = std::move(rows);
    return j.dump(2);
  }
  if (format == RenderFormat::kCsv) {
    std::ostringstream os;
    os << "feature,net,positive,negative\n";
    for (const PredictorImportance& p : summary.predictors) {
      os << p.name << ',' << fmt_full(p.net) << ',' << fmt_full(p.positive) << ','
         << fmt_full(p.negative) << '\n';
    }
    return os.str();
  }

  // SVG: one horizontal bar per predictor around a central axis.
  const int row_h = 18, label_w = 150, plot_w = 420, top = 34;
  const int n = static_cast<int>(summary.predictors.size());
  const int height = top + n * row_h + 14;
  double anchor = 0.0;
  for (const PredictorImportance& p : summary.predictors) anchor = std::max(anchor, std::abs(p.net));
  std::ostringstream os;
  os << svg_header(label_w + plot_w + 20, height);
  os << svg_text(10, 16, "Marginal predictor importance, patient " + summary.patient_id +
                             " (p=" + fmt_short(summary.predicted_probability) + ")");
  const double mid = label_w + plot_w / 2.0;
  os << svg_line(mid, top - 6, mid, top + n * row_h, "#999999");
  for (int i = 0; i < n; ++i) {
    const PredictorImportance& p = summary.predictors[i];
    const double y = top + i * row_h;
    os << svg_text(10, static_cast<int>(y + 12), p.name);
    const double extent = anchor > 0.0 ? (p.net / anchor) * (plot_w / 2.0 - 4.0) : 0.0;
    const double x0 = extent >= 0.0 ? mid : mid + extent;
    os << svg_rect(x0, y + 3, std::abs(extent), row_h - 6, diverging_color(p.net, anchor));
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Hourly grid

std::string render_hourly(const AttributionMap& map, RenderFormat format,
                          const FeatureCatalog& catalog) {
  check_map(map);
  const std::size_t C = map.contributions.size(0), T = map.contributions.size(1);
  if (format == RenderFormat::kJson) {
    nlohmann::json j;
    j["kind"] = "hourly";
    j["patient_id"] = map.patient_id;
    j["delta"] = map.delta;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t c = 0; c < C; ++c) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t t = 0; t < T; ++t) row.push_back(map.contributions.at(c, t));
      rows.push_back({{"feature", catalog.at(c).name}, {"hours", std::move(row)}});
    }
    j["grid"] = std::move(rows);
    return j.dump(2);
  }
  if (format == RenderFormat::kCsv) {
    std::ostringstream os;
    os << "feature";
    for (std::size_t t = 0; t < T; ++t) os << ",h" << t;
    os << '\n';
    for (std::size_t c = 0; c < C; ++c) {
      os << catalog.at(c).name;
      for (std::size_t t = 0; t < T; ++t) os << ',' << fmt_full(map.contributions.at(c, t));
      os << '\n';
    }
    return os.str();
  }

  const int cell = 12, label_w = 150, top = 30;
  const int width = label_w + static_cast<int>(T) * cell + 16;
  const int height = top + static_cast<int>(C) * cell + 26;
  double anchor = 0.0;
  for (std::size_t j = 0; j < map.contributions.numel(); ++j) {
    anchor = std::max(anchor, std::abs(map.contributions[j]));
  }
  std::ostringstream os;
  os << svg_header(width, height);
  os << svg_text(10, 16, "Hourly predictor importance, patient " + map.patient_id);
  for (std::size_t c = 0; c < C; ++c) {
    os << svg_text(10, top + static_cast<int>(c) * cell + 10, catalog.at(c).name);
    for (std::size_t t = 0; t < T; ++t) {
      os << svg_rect(label_w + static_cast<double>(t) * cell, top + static_cast<double>(c) * cell,
                     cell - 1, cell - 1, diverging_color(map.contributions.at(c, t), anchor));
    }
  }
  for (std::size_t t = 0; t < T; t += 6) {
    os << svg_text(label_w + static_cast<int>(t) * cell, height - 8, "h" + std::to_string(t));
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Positive / negative split

std::string render_posneg(const AttributionMap& map, RenderFormat format,
                          const FeatureCatalog& catalog) {
  const std::vector<PosNegSums> sums = pos_neg_split(map);
  if (sums.size() != catalog.size()) {
    throw std::invalid_argument("render_posneg: channel count does not match catalog");
  }
  if (format == RenderFormat::kJson) {
    nlohmann::json j;
    j["kind"] = "posneg";
    j["patient_id"] = map.patient_id;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      rows.push_back({{"feature", catalog.at(c).name},
                      {"positive", sums[c].positive},
                      {"negative", sums[c].negative},
                      {"net", sums[c].positive + sums[c].negative}});
    }
    j["predictors"] = std::move(rows);
    return j.dump(2);
  }
  if (format == RenderFormat::kCsv) {
    std::ostringstream os;
    os << "feature,positive,negative\n";
    for (std::size_t c = 0; c < sums.size(); ++c) {
      os << catalog.at(c).name << ',' << fmt_full(sums[c].positive) << ','
         << fmt_full(sums[c].negative) << '\n';
    }
    return os.str();
  }

  const int row_h = 18, label_w = 150, plot_w = 420, top = 34;
  const int n = static_cast<int>(sums.size());
  double anchor = 0.0;
  for (const PosNegSums& s : sums) anchor = std::max({anchor, s.positive, -s.negative});
  std::ostringstream os;
  os << svg_header(label_w + plot_w + 20, top + n * row_h + 14);
  os << svg_text(10, 16, "Positive and negative importance, patient " + map.patient_id);
  const double mid = label_w + plot_w / 2.0;
  os << svg_line(mid, top - 6, mid, top + n * row_h, "#999999");
  for (int i = 0; i < n; ++i) {
    const double y = top + i * row_h;
    os << svg_text(10, static_cast<int>(y + 12), catalog.at(i).name);
    const double half = plot_w / 2.0 - 4.0;
    if (anchor > 0.0) {
      const double pw = sums[i].positive / anchor * half;
      const double nw = -sums[i].negative / anchor * half;
      os << svg_rect(mid, y + 3, pw, row_h / 2.0 - 3, "#b2182b");
      os << svg_rect(mid - nw, y + row_h / 2.0, nw, row_h / 2.0 - 3, "#2166ac");
    }
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Dataset-level box statistics

std::string render_dataset(const DatasetImportanceStats& stats, RenderFormat format,
                           const FeatureCatalog& catalog) {
  const std::size_t C = catalog.size();
  const char* class_names[2] = {"survived", "died"};
  if (format == RenderFormat::kJson) {
    nlohmann::json j;
    j["kind"] = "dataset";
    j["class_counts"] = {{"survived", stats.class_counts[0]}, {"died", stats.class_counts[1]}};
    nlohmann::json rows = nlohmann::json::array();
    for (int cls = 0; cls < 2; ++cls) {
      for (std::size_t c = 0; c < C; ++c) {
        auto box_json = [](const BoxStats& b) {
          return nlohmann::json{{"median", b.median},
                                {"q1", b.q1},
                                {"q3", b.q3},
                                {"whisker_low", b.whisker_low},
                                {"whisker_high", b.whisker_high}};
        };
        rows.push_back({{"class", class_names[cls]},
                        {"feature", catalog.at(c).name},
                        {"positive", box_json(stats.positive[cls][c])},
                        {"negative", box_json(stats.negative[cls][c])}});
      }
    }
    j["predictors"] = std::move(rows);
    return j.dump(2);
  }
  if (format == RenderFormat::kCsv) {
    std::ostringstream os;
    os << "class,feature,part,median,q1,q3,whisker_low,whisker_high\n";
    for (int cls = 0; cls < 2; ++cls) {
      for (std::size_t c = 0; c < C; ++c) {
        auto row = [&](const char* part, const BoxStats& b) {
          os << class_names[cls] << ',' << catalog.at(c).name << ',' << part << ','
             << fmt_full(b.median) << ',' << fmt_full(b.q1) << ',' << fmt_full(b.q3) << ','
             << fmt_full(b.whisker_low) << ',' << fmt_full(b.whisker_high) << '\n';
        };
        row("positive", stats.positive[cls][c]);
        row("negative", stats.negative[cls][c]);
      }
    }
    return os.str();
  }

  // SVG: one row per predictor, a panel per class, positive (red) and
  // negative (blue) boxes sharing a symmetric axis.
  const int row_h = 18, label_w = 150, panel_w = 260, gap = 24, top = 46;
  const int n = static_cast<int>(C);
  double anchor = 0.0;
  for (int cls = 0; cls < 2; ++cls) {
    for (std::size_t c = 0; c < C; ++c) {
      anchor = std::max({anchor, std::abs(stats.positive[cls][c].whisker_high),
                         std::abs(stats.negative[cls][c].whisker_low)});
    }
  }
  std::ostringstream os;
  os << svg_header(label_w + 2 * panel_w + gap + 20, top + n * row_h + 14);
  os << svg_text(10, 16, "Dataset-level predictor importance by true class");
  for (int cls = 0; cls < 2; ++cls) {
    const double px = label_w + cls * (panel_w + gap);
    os << svg_text(static_cast<int>(px + panel_w / 2.0), 34, class_names[cls], "middle");
    const double mid = px + panel_w / 2.0;
    os << svg_line(mid, top - 6, mid, top + n * row_h, "#999999");
    auto x_of = [&](double v) {
      return anchor > 0.0 ? mid + (v / anchor) * (panel_w / 2.0 - 4.0) : mid;
    };
    for (int i = 0; i < n; ++i) {
      const double y = top + i * row_h;
      if (cls == 0) os << svg_text(10, static_cast<int>(y + 12), catalog.at(i).name);
      auto draw_box = [&](const BoxStats& b, double y0, const std::string& color) {
        os << svg_line(x_of(b.whisker_low), y0 + 3, x_of(b.q1), y0 + 3, color);
        os << svg_line(x_of(b.q3), y0 + 3, x_of(b.whisker_high), y0 + 3, color);
        os << svg_rect(x_of(b.q1), y0, std::max(0.5, x_of(b.q3) - x_of(b.q1)), 6, color);
        os << svg_line(x_of(b.median), y0, x_of(b.median), y0 + 6, "#000000");
      };
      draw_box(stats.positive[cls][i], y + 2, "#b2182b");
      draw_box(stats.negative[cls][i], y + 9, "#2166ac");
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::vector<double>> parse_hourly_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("parse_hourly_csv: empty input");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string field;
    bool first = true;
    while (std::getline(ls, field, ',')) {
      if (first) {
        first = false;
        continue;  // feature name column
      }
      row.push_back(std::stod(field));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace icurisk
