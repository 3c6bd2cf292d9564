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

#include "icurisk/features.hpp"

namespace icurisk {

namespace {

FeatureSpec temporal(std::string name, std::string label, double lo, double hi,
                     ImputePolicy policy, double mean, double std, double missing,
                     Aggregator agg = Aggregator::kMean, double normal_value = 0.0) {
  FeatureSpec s;
  s.name = std::move(name);
  s.label = std::move(label);
  s.kind = FeatureKind::kTemporal;
  s.min_value = lo;
  s.max_value = hi;
  s.aggregator = agg;
  s.imputation = policy;
  s.normal_value = normal_value;
  s.ref_mean = mean;
  s.ref_std = std;
  s.ref_missing_fraction = missing;
  return s;
}

FeatureSpec static_feature(std::string name, std::string label, double lo, double hi,
                           double mean, double std) {
  FeatureSpec s;
  s.name = std::move(name);
  s.label = std::move(label);
  s.kind = FeatureKind::kStatic;
  s.min_value = lo;
  s.max_value = hi;
  s.imputation = ImputePolicy::kReplicate;
  s.ref_mean = mean;
  s.ref_std = std;
  return s;
}

std::vector<FeatureSpec> build_standard() {
  using IP = ImputePolicy;
  std::vector<FeatureSpec> specs;
  specs.reserve(kNumFeatures);

  // Temporal features. Bounds are the plausibility windows used to discard
  // out-of-range observations; urine output is the single sum-aggregated
  // feature and negative volumes are discarded (lower bound 0).
  specs.push_back(temporal("bicarbonate", "Bicarbonate", 5.0, 52.0, IP::kForwardBackwardThenMean,
                           23.296, 4.733, 0.9279));
  specs.push_back(temporal("bilirubin", "Bilirubin", 0.1, 82.0, IP::kForwardBackwardThenMean,
                           3.098, 6.170, 0.9823));
  specs.push_back(temporal("bun", "Blood urea nitrogen", 1.0, 240.0, IP::kForwardBackwardThenMean,
                           27.497, 22.493, 0.9269));
  specs.push_back(temporal("diastolic_bp", "Diastolic BP", 1.0, 298.0, IP::kForwardBackwardThenMean,
                           59.648, 14.090, 0.1007));
  specs.push_back(temporal("fio2", "FiO2", 0.4, 100.0, IP::kForwardThenNormal,
                           50.100, 20.030, 0.8304, Aggregator::kMean, 0.2));
  specs.push_back(temporal("gcs_eyes", "GCS (eyes)", 1.0, 4.0, IP::kForwardThenMean,
                           3.140, 1.142, 0.6830));
  specs.push_back(temporal("gcs_motor", "GCS (motor)", 1.0, 6.0, IP::kForwardThenMean,
                           5.256, 1.440, 0.6845));
  specs.push_back(temporal("gcs_verbal", "GCS (verbal)", 1.0, 5.0, IP::kForwardThenMean,
                           3.123, 1.902, 0.6839));
  specs.push_back(temporal("heart_rate", "Heart rate", 0.35, 280.0, IP::kForwardBackwardThenMean,
                           87.913, 18.951, 0.0753));
  specs.push_back(temporal("po2", "PO2", 14.0, 763.0, IP::kForwardBackwardThenMean,
                           149.763, 95.724, 0.8935));
  specs.push_back(temporal("potassium", "Potassium", 0.6, 26.5, IP::kForwardBackwardThenMean,
                           4.192, 0.700, 0.8821));
  specs.push_back(temporal("sodium", "Sodium", 1.21, 183.0, IP::kForwardBackwardThenMean,
                           138.294, 5.350, 0.9127));
  specs.push_back(temporal("systolic_bp", "Systolic BP", 0.15, 323.0, IP::kForwardBackwardThenMean,
                           118.518, 22.973, 0.1005));
  specs.push_back(temporal("temperature", "Temperature", 15.0, 42.222, IP::kForwardBackwardThenMean,
                           37.007, 0.861, 0.6615));
  specs.push_back(temporal("urine_output", "Urine output", 0.0, 4800.0, IP::kMeanOnly,
                           113.900, 162.357, 0.3315, Aggregator::kSum));
  specs.push_back(temporal("wbc", "White cell count", 0.1, 528.0, IP::kForwardBackwardThenMean,
                           12.743, 11.377, 0.9327));

  // Static features, replicated across the horizon. Prevalences double as
  // generator targets (stored in ref_mean for the flags).
  specs.push_back(static_feature("age", "Age", 16.016, 80.0, 63.828, 15.576));
  specs.push_back(static_feature("elective_admission", "Elective admission", 0.0, 1.0, 0.14134, 0.0));
  specs.push_back(static_feature("surgical_admission", "Surgical admission", 0.0, 1.0, 0.35827, 0.0));
  specs.push_back(static_feature("aids", "AIDS", 0.0, 1.0, 0.00504, 0.0));
  specs.push_back(static_feature("metastatic_cancer", "Metastatic cancer", 0.0, 1.0, 0.03069, 0.0));
  specs.push_back(static_feature("lymphoma", "Lymphoma", 0.0, 1.0, 0.01414, 0.0));
  return specs;
}

}  // namespace

const FeatureCatalog& FeatureCatalog::standard() {
  static const FeatureCatalog catalog(build_standard());
  return catalog;
}

int FeatureCatalog::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> FeatureCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(specs_.size());
  for (const FeatureSpec& s : specs_) out.push_back(s.name);
  return out;
}

}  // namespace icurisk
