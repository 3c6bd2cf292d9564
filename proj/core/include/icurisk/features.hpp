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

#ifndef ICURISK_FEATURES_HPP
#define ICURISK_FEATURES_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace icurisk {

inline constexpr int kHorizonHours = 48;
inline constexpr int kNumFeatures = 22;
inline constexpr int kNumTemporalFeatures = 16;
inline constexpr int kNumStaticFeatures = 6;

enum class FeatureKind { kTemporal, kStatic };
enum class Aggregator { kMean, kSum };

// How gaps in an hourly series are filled. Forward fill always runs first
// where named; what remains differs per policy.
enum class ImputePolicy {
  kForwardBackwardThenMean,  // forward, then backward for leading gaps, cohort mean if empty
  kForwardThenMean,          // forward only; leading gaps get the cohort mean
  kForwardThenNormal,        // forward only; remaining gaps get a declared normal value
  kMeanOnly,                 // every gap gets the cohort mean
  kReplicate,                // static scalar copied across the horizon
};

// Per-feature metadata: identity, physiological plausibility bounds used to
// discard outliers before aggregation, the hourly aggregator, the imputation
// policy, and reference cohort statistics that calibrate the synthetic
// generator.
struct FeatureSpec {
  std::string name;   // canonical snake_case identifier (file formats, CSV headers)
  std::string label;  // human readable display name
  FeatureKind kind = FeatureKind::kTemporal;
  double min_value = 0.0;
  double max_value = 0.0;
  Aggregator aggregator = Aggregator::kMean;
  ImputePolicy imputation = ImputePolicy::kForwardBackwardThenMean;
  double normal_value = 0.0;  // only meaningful for kForwardThenNormal
  // Reference marginals (observed values) and the fraction of hourly slots
  // with no observation, both used as synthetic-generator targets.
  double ref_mean = 0.0;
  double ref_std = 0.0;
  double ref_missing_fraction = 0.0;
};

// The fixed 22-feature catalog; catalog order defines the input channel
// order (16 temporal channels, then age and the five admission/comorbidity
// flags).
class FeatureCatalog {
 public:
  static const FeatureCatalog& standard();

  const std::vector<FeatureSpec>& all() const { return specs_; }
  std::size_t size() const { return specs_.size(); }
  const FeatureSpec& at(std::size_t channel) const { return specs_[channel]; }

  // Channel index for a canonical name, -1 if unknown.
  int index_of(const std::string& name) const;
  bool is_temporal(std::size_t channel) const {
    return specs_[channel].kind == FeatureKind::kTemporal;
  }

  std::vector<std::string> names() const;

 private:
  explicit FeatureCatalog(std::vector<FeatureSpec> specs) : specs_(std::move(specs)) {}
  std::vector<FeatureSpec> specs_;
};

}  // namespace icurisk

#endif  // ICURISK_FEATURES_HPP
