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

#ifndef ICURISK_INGEST_HPP
#define ICURISK_INGEST_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icurisk/features.hpp"
#include "icurisk/tensor.hpp"

namespace icurisk {

// One raw measurement: which feature, when within the first 48 hours, value.
struct Observation {
  int feature = -1;  // channel index in the standard catalog
  double offset_hours = 0.0;
  double value = 0.0;
};

struct RawPatientRecord {
  std::string patient_id;
  double admission_age = 0.0;  // years
  double stay_hours = 0.0;
  int admission_index = 1;  // ordinal of the ICU admission, 1 = first
  bool elective_admission = false;
  bool surgical_admission = false;
  bool aids = false;
  bool metastatic_cancer = false;
  bool lymphoma = false;
  std::vector<Observation> observations;
  int died = 0;
};

// A complete 22-channel x 48-hour grid; no missing values remain.
struct PatientMatrix {
  std::string patient_id;
  Tensor grid;  // [22, 48]
  int label = 0;
};

// Observed-value statistics per channel, computed over hourly-aggregated
// slots across the cohort before imputation. Temporal channels only; static
// slots stay at zero counts.
struct CohortStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::uint64_t> count;

  CohortStats();
  bool has_mean(std::size_t channel) const { return count[channel] > 0; }
};

enum class Provenance : std::uint8_t { kSynthetic = 0, kExternal = 1 };

struct CohortDataset {
  std::vector<PatientMatrix> patients;
  CohortStats stats;
  Provenance provenance = Provenance::kExternal;
};

// Per-channel standardization parameters fitted on a training split.
struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1e-8 when applied
};

// Hourly series with NaN marking an empty slot.
using HourlySeries = std::array<double, kHorizonHours>;

inline bool slot_missing(double v) { return std::isnan(v); }
HourlySeries empty_series();

// Entry criteria: ICU stay strictly longer than 48 h, age over 16 years,
// first ICU admission only. Pure filter; retained records are untouched.
std::vector<RawPatientRecord> apply_entry_criteria(std::vector<RawPatientRecord> records);
bool passes_entry_criteria(const RawPatientRecord& record);

// Ages above 80 years are clipped to 80 (de-identified records show absurd
// ages). Rejects non-positive input.
double clip_age(double age_years);

// Buckets one feature's observations into 48 hourly slots: values outside
// the spec's plausibility bounds are discarded, then each slot aggregates
// what is left (mean, or sum for urine output). Empty slots stay NaN.
HourlySeries aggregate_hourly(std::span<const Observation> obs, const FeatureSpec& spec);

// Fills every missing slot according to the spec's policy. cohort_mean may be
// NaN when unknown; policies that need it throw, naming the feature.
HourlySeries impute_series(const HourlySeries& series, const FeatureSpec& spec, double cohort_mean);

// Observed-slot statistics over a set of records (the reduction that runs
// before any imputation).
CohortStats compute_cohort_stats(std::span<const RawPatientRecord> records,
                                 const FeatureCatalog& catalog = FeatureCatalog::standard());

// Full per-patient pipeline: 16 temporal channels aggregated and imputed,
// age clipped and replicated, the five flags replicated as 0/1.
PatientMatrix build_matrix(const RawPatientRecord& record, const CohortStats& stats,
                           const FeatureCatalog& catalog = FeatureCatalog::standard());

// Entry criteria + cohort statistics + matrices in one call.
CohortDataset build_cohort(std::vector<RawPatientRecord> records, Provenance provenance,
                           const FeatureCatalog& catalog = FeatureCatalog::standard());

StandardizationStats standardize_fit(std::span<const PatientMatrix> training);
Tensor standardize_apply(const Tensor& grid, const StandardizationStats& stats);

// CSV interfaces. patients.csv: patient_id, age, stay_hours, admission_index,
// elective, surgical, aids, metastatic_cancer, lymphoma, died.
// observations.csv: patient_id, feature_name, offset_hours, value.
// Headers are required; unknown feature names are rejected.
std::vector<RawPatientRecord> load_patient_records(const std::string& patients_csv,
                                                   const std::string& observations_csv,
                                                   const FeatureCatalog& catalog = FeatureCatalog::standard());

}  // namespace icurisk

#endif  // ICURISK_INGEST_HPP
