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

#ifndef ICURISK_REPORT_HPP
#define ICURISK_REPORT_HPP

#include <array>
#include <span>
#include <string>
#include <vector>

#include "icurisk/attribution.hpp"
#include "icurisk/features.hpp"

namespace icurisk {

// Per-predictor importance for one patient, normalized by the L1 norm of the
// per-predictor net sums so magnitudes compare across patients. net is the
// exact sum of the positive and negative parts.
struct PredictorImportance {
  std::string name;
  double net = 0.0;
  double positive = 0.0;
  double negative = 0.0;
};

struct PredictorSummary {
  std::string patient_id;
  double predicted_probability = 0.0;
  double normalizer = 0.0;  // L1 norm of raw per-predictor net sums
  std::vector<PredictorImportance> predictors;
};

// Marginal (total) predictor importance: hourly contributions summed per
// channel, split into sign parts, normalized. An all-zero map stays all zero.
PredictorSummary marginal_importance(const AttributionMap& map,
                                     const FeatureCatalog& catalog = FeatureCatalog::standard());

// Raw per-predictor (sum of positive cells, sum of negative cells); their sum
// is the channel's net contribution before normalization.
struct PosNegSums {
  double positive = 0.0;  // >= 0
  double negative = 0.0;  // <= 0
};
std::vector<PosNegSums> pos_neg_split(const AttributionMap& map);

struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
};

// Five-number summaries of normalized positive and negative importance per
// predictor, grouped by true class (0 = survived, 1 = died). Needs at least
// five patients of each class.
struct DatasetImportanceStats {
  std::array<std::size_t, 2> class_counts = {0, 0};
  std::array<std::vector<BoxStats>, 2> positive;  // [class][predictor]
  std::array<std::vector<BoxStats>, 2> negative;
};

DatasetImportanceStats dataset_importance(std::span<const AttributionMap> maps,
                                          std::span<const int> labels,
                                          const FeatureCatalog& catalog = FeatureCatalog::standard());

// Linear-interpolation quantile of a sample (the common numpy default).
double quantile(std::span<const double> values, double p);

enum class RenderFormat { kJson, kCsv, kSvg };
RenderFormat parse_render_format(const std::string& name);  // json|csv|svg

// Renderers produce the full output bytes; identical inputs give identical
// bytes. SVG uses a diverging scale, red for death-evidence, blue for
// survival-evidence, symmetric around zero (neutral gray).
std::string render_marginal(const PredictorSummary& summary, RenderFormat format);
std::string render_hourly(const AttributionMap& map, RenderFormat format,
                          const FeatureCatalog& catalog = FeatureCatalog::standard());
std::string render_posneg(const AttributionMap& map, RenderFormat format,
                          const FeatureCatalog& catalog = FeatureCatalog::standard());
std::string render_dataset(const DatasetImportanceStats& stats, RenderFormat format,
                           const FeatureCatalog& catalog = FeatureCatalog::standard());

// Hourly CSV grid back to numbers (round-trips at full precision).
std::vector<std::vector<double>> parse_hourly_csv(const std::string& csv);

}  // namespace icurisk

#endif  // ICURISK_REPORT_HPP
