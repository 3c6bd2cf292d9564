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

#include "icurisk/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace icurisk {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMaxAgeYears = 80.0;
constexpr double kStdFloor = 1e-8;
}  // namespace

CohortStats::CohortStats()
    : mean(kNumFeatures, kNaN), stddev(kNumFeatures, kNaN), count(kNumFeatures, 0) {}

HourlySeries empty_series() {
  HourlySeries s;
  s.fill(kNaN);
  return s;
}

bool passes_entry_criteria(const RawPatientRecord& r) {
  return r.stay_hours > 48.0 && r.admission_age > 16.0 && r.admission_index == 1;
}

std::vector<RawPatientRecord> apply_entry_criteria(std::vector<RawPatientRecord> records) {
  std::vector<RawPatientRecord> kept;
  kept.reserve(records.size());
  for (RawPatientRecord& r : records) {
    if (passes_entry_criteria(r)) kept.push_back(std::move(r));
  }
  return kept;
}

double clip_age(double age_years) {
  if (!(age_years > 0.0)) {
    throw std::invalid_argument("clip_age: age must be positive, got " + std::to_string(age_years));
  }
  return std::min(age_years, kMaxAgeYears);
}

HourlySeries aggregate_hourly(std::span<const Observation> obs, const FeatureSpec& spec) {
  std::array<std::vector<double>, kHorizonHours> slots;
  for (const Observation& o : obs) {
    if (!(o.offset_hours >= 0.0) || o.offset_hours >= static_cast<double>(kHorizonHours)) {
      throw std::invalid_argument("aggregate_hourly: offset " + std::to_string(o.offset_hours) +
                                  " outside [0, 48) for feature " + spec.name);
    }
    if (!std::isfinite(o.value) || o.value < spec.min_value || o.value > spec.max_value) {
      continue;  // un-physiological; discarded before aggregation
    }
    const int h = static_cast<int>(std::floor(o.offset_hours));
    slots[h].push_back(o.value);
  }
  HourlySeries out = empty_series();
  for (int h = 0; h < kHorizonHours; ++h) {
    if (slots[h].empty()) continue;
    // Canonical summation order keeps the result independent of observation
    // ordering down to the last bit.
    std::sort(slots[h].begin(), slots[h].end());
    double acc = 0.0;
    for (double v : slots[h]) acc += v;
    out[h] = spec.aggregator == Aggregator::kSum ? acc : acc / static_cast<double>(slots[h].size());
  }
  return out;
}

namespace {

void forward_fill(HourlySeries& s) {
  double last = kNaN;
  for (double& v : s) {
    if (slot_missing(v)) {
      v = last;  // stays NaN before the first observation
    } else {
      last = v;
    }
  }
}

void backward_fill(HourlySeries& s) {
  double next = kNaN;
  for (int h = kHorizonHours - 1; h >= 0; --h) {
    if (slot_missing(s[h])) {
      s[h] = next;
    } else {
      next = s[h];
    }
  }
}

void fill_remaining(HourlySeries& s, double value) {
  for (double& v : s) {
    if (slot_missing(v)) v = value;
  }
}

bool any_missing(const HourlySeries& s) {
  return std::any_of(s.begin(), s.end(), [](double v) { return slot_missing(v); });
}

double require_cohort_mean(double cohort_mean, const FeatureSpec& spec) {
  if (slot_missing(cohort_mean)) {
    throw std::runtime_error("impute_series: cohort mean unavailable for feature " + spec.name);
  }
  return cohort_mean;
}

}  // namespace

HourlySeries impute_series(const HourlySeries& series, const FeatureSpec& spec, double cohort_mean) {
  HourlySeries s = series;
  switch (spec.imputation) {
    case ImputePolicy::kForwardBackwardThenMean:
      forward_fill(s);
      backward_fill(s);
      if (any_missing(s)) fill_remaining(s, require_cohort_mean(cohort_mean, spec));
      break;
    case ImputePolicy::kForwardThenMean:
      forward_fill(s);
      if (any_missing(s)) fill_remaining(s, require_cohort_mean(cohort_mean, spec));
      break;
    case ImputePolicy::kForwardThenNormal:
      forward_fill(s);
      fill_remaining(s, spec.normal_value);
      break;
    case ImputePolicy::kMeanOnly:
      if (any_missing(s)) fill_remaining(s, require_cohort_mean(cohort_mean, spec));
      break;
    case ImputePolicy::kReplicate:
      throw std::logic_error("impute_series: replicate policy applies to static features only");
  }
  return s;
}

CohortStats compute_cohort_stats(std::span<const RawPatientRecord> records,
                                 const FeatureCatalog& catalog) {
  std::vector<double> sum(catalog.size(), 0.0), sumsq(catalog.size(), 0.0);
  CohortStats stats;
  std::vector<std::vector<Observation>> per_feature(catalog.size());
  for (const RawPatientRecord& r : records) {
    for (auto& v : per_feature) v.clear();
    for (const Observation& o : r.observations) {
      if (o.feature < 0 || o.feature >= static_cast<int>(catalog.size())) {
        throw std::invalid_argument("compute_cohort_stats: unknown feature index " +
                                    std::to_string(o.feature));
      }
      per_feature[o.feature].push_back(o);
    }
    for (std::size_t f = 0; f < catalog.size(); ++f) {
      if (!catalog.is_temporal(f) || per_feature[f].empty()) continue;
      const HourlySeries s = aggregate_hourly(per_feature[f], catalog.at(f));
      for (double v : s) {
        if (slot_missing(v)) continue;
        sum[f] += v;
        sumsq[f] += v * v;
        ++stats.count[f];
      }
    }
  }
  for (std::size_t f = 0; f < catalog.size(); ++f) {
    if (stats.count[f] == 0) continue;
    const double n = static_cast<double>(stats.count[f]);
    stats.mean[f] = sum[f] / n;
    const double var = std::max(0.0, sumsq[f] / n - stats.mean[f] * stats.mean[f]);
    stats.stddev[f] = std::sqrt(var);
  }
  return stats;
}

PatientMatrix build_matrix(const RawPatientRecord& record, const CohortStats& stats,
                           const FeatureCatalog& catalog) {
  PatientMatrix out;
  out.patient_id = record.patient_id;
  out.label = record.died;
  out.grid = Tensor({static_cast<std::size_t>(catalog.size()),
                     static_cast<std::size_t>(kHorizonHours)});

  std::vector<std::vector<Observation>> per_feature(catalog.size());
  for (const Observation& o : record.observations) {
    if (o.feature < 0 || o.feature >= static_cast<int>(catalog.size()) ||
        !catalog.is_temporal(static_cast<std::size_t>(o.feature))) {
      throw std::invalid_argument("build_matrix: unknown or non-temporal feature index " +
                                  std::to_string(o.feature) + " for patient " + record.patient_id);
    }
    per_feature[o.feature].push_back(o);
  }

  for (std::size_t f = 0; f < catalog.size(); ++f) {
    const FeatureSpec& spec = catalog.at(f);
    if (spec.kind == FeatureKind::kTemporal) {
      const HourlySeries raw = aggregate_hourly(per_feature[f], spec);
      const HourlySeries filled = impute_series(raw, spec, stats.mean[f]);
      for (int h = 0; h < kHorizonHours; ++h) out.grid.at(f, h) = filled[h];
      continue;
    }
    double value = 0.0;
    if (spec.name == "age") {
      value = clip_age(record.admission_age);
    } else if (spec.name == "elective_admission") {
      value = record.elective_admission ? 1.0 : 0.0;
    } else if (spec.name == "surgical_admission") {
      value = record.surgical_admission ? 1.0 : 0.0;
    } else if (spec.name == "aids") {
      value = record.aids ? 1.0 : 0.0;
    } else if (spec.name == "metastatic_cancer") {
      value = record.metastatic_cancer ? 1.0 : 0.0;
    } else if (spec.name == "lymphoma") {
      value = record.lymphoma ? 1.0 : 0.0;
    } else {
      throw std::logic_error("build_matrix: unhandled static feature " + spec.name);
    }
    for (int h = 0; h < kHorizonHours; ++h) out.grid.at(f, h) = value;
  }
  if (!out.grid.all_finite()) {
    throw std::logic_error("build_matrix: non-finite value in matrix for patient " +
                           record.patient_id);
  }
  return out;
}

CohortDataset build_cohort(std::vector<RawPatientRecord> records, Provenance provenance,
                           const FeatureCatalog& catalog) {
  CohortDataset cohort;
  cohort.provenance = provenance;
  std::vector<RawPatientRecord> kept = apply_entry_criteria(std::move(records));

  std::unordered_set<std::string> ids;
  for (const RawPatientRecord& r : kept) {
    if (!ids.insert(r.patient_id).second) {
      throw std::invalid_argument("build_cohort: duplicate patient id " + r.patient_id);
    }
  }

  cohort.stats = compute_cohort_stats(kept, catalog);
  cohort.patients.reserve(kept.size());
  for (const RawPatientRecord& r : kept) {
    cohort.patients.push_back(build_matrix(r, cohort.stats, catalog));
  }
  return cohort;
}

StandardizationStats standardize_fit(std::span<const PatientMatrix> training) {
  if (training.empty()) {
    throw std::invalid_argument("standardize_fit: empty training set");
  }
  const std::size_t C = training.front().grid.size(0);
  const std::size_t T = training.front().grid.size(1);
  StandardizationStats stats;
  stats.mean.assign(C, 0.0);
  stats.stddev.assign(C, 0.0);
  const double n = static_cast<double>(training.size() * T);
  for (const PatientMatrix& p : training) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* row = p.grid.data() + c * T;
      for (std::size_t t = 0; t < T; ++t) stats.mean[c] += row[t];
    }
  }
  for (std::size_t c = 0; c < C; ++c) stats.mean[c] /= n;
  for (const PatientMatrix& p : training) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* row = p.grid.data() + c * T;
      for (std::size_t t = 0; t < T; ++t) {
        const double d = row[t] - stats.mean[c];
        stats.stddev[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < C; ++c) stats.stddev[c] = std::sqrt(stats.stddev[c] / n);
  return stats;
}

Tensor standardize_apply(const Tensor& grid, const StandardizationStats& stats) {
  if (grid.rank() != 2 || grid.size(0) != stats.mean.size()) {
    throw std::invalid_argument("standardize_apply: grid " + shape_to_string(grid.shape()) +
                                " does not match " + std::to_string(stats.mean.size()) +
                                " fitted channels");
  }
  const std::size_t C = grid.size(0), T = grid.size(1);
  Tensor out(grid.shape());
  for (std::size_t c = 0; c < C; ++c) {
    const double inv = 1.0 / std::max(stats.stddev[c], kStdFloor);
    const double mu = stats.mean[c];
    const double* src = grid.data() + c * T;
    double* dst = out.data() + c * T;
    for (std::size_t t = 0; t < T; ++t) dst[t] = (src[t] - mu) * inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV loading

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

void require_header(const std::vector<std::string>& got, const std::vector<std::string>& want,
                    const std::string& path) {
  if (got.size() != want.size()) {
    throw std::runtime_error(path + ": expected " + std::to_string(want.size()) +
                             " header columns, got " + std::to_string(got.size()));
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (trim(got[i]) != want[i]) {
      throw std::runtime_error(path + ": header column " + std::to_string(i + 1) + " is '" +
                               trim(got[i]) + "', expected '" + want[i] + "'");
    }
  }
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != trim(s).size() && pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad numeric value '" + s + "'");
  }
}

int parse_flag(const std::string& s, const std::string& path, std::size_t line_no) {
  const std::string t = trim(s);
  if (t == "0" || t == "false") return 0;
  if (t == "1" || t == "true") return 1;
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad flag value '" + s + "'");
}

}  // namespace

std::vector<RawPatientRecord> load_patient_records(const std::string& patients_csv,
                                                   const std::string& observations_csv,
                                                   const FeatureCatalog& catalog) {
  std::ifstream pf(patients_csv);
  if (!pf) throw std::runtime_error("cannot open " + patients_csv);
  std::string line;
  if (!std::getline(pf, line)) throw std::runtime_error(patients_csv + ": empty file");
  require_header(split_csv_line(line),
                 {"patient_id", "age", "stay_hours", "admission_index", "elective", "surgical",
                  "aids", "metastatic_cancer", "lymphoma", "died"},
                 patients_csv);

  std::vector<RawPatientRecord> records;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(pf, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) {
      throw std::runtime_error(patients_csv + ":" + std::to_string(line_no) + ": expected 10 fields");
    }
    RawPatientRecord r;
    r.patient_id = trim(f[0]);
    r.admission_age = parse_double(f[1], patients_csv, line_no);
    r.stay_hours = parse_double(f[2], patients_csv, line_no);
    r.admission_index = static_cast<int>(parse_double(f[3], patients_csv, line_no));
    r.elective_admission = parse_flag(f[4], patients_csv, line_no) != 0;
    r.surgical_admission = parse_flag(f[5], patients_csv, line_no) != 0;
    r.aids = parse_flag(f[6], patients_csv, line_no) != 0;
    r.metastatic_cancer = parse_flag(f[7], patients_csv, line_no) != 0;
    r.lymphoma = parse_flag(f[8], patients_csv, line_no) != 0;
    r.died = parse_flag(f[9], patients_csv, line_no);
    if (index.count(r.patient_id) != 0) {
      throw std::runtime_error(patients_csv + ":" + std::to_string(line_no) +
                               ": duplicate patient id " + r.patient_id);
    }
    index[r.patient_id] = records.size();
    records.push_back(std::move(r));
  }

  std::ifstream of(observations_csv);
  if (!of) throw std::runtime_error("cannot open " + observations_csv);
  if (!std::getline(of, line)) throw std::runtime_error(observations_csv + ": empty file");
  require_header(split_csv_line(line), {"patient_id", "feature_name", "offset_hours", "value"},
                 observations_csv);
  line_no = 1;
  while (std::getline(of, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) {
      throw std::runtime_error(observations_csv + ":" + std::to_string(line_no) +
                               ": expected 4 fields");
    }
    const std::string id = trim(f[0]);
    const auto it = index.find(id);
    if (it == index.end()) {
      throw std::runtime_error(observations_csv + ":" + std::to_string(line_no) +
                               ": unknown patient id " + id);
    }
    const std::string feature_name = trim(f[1]);
    const int channel = catalog.index_of(feature_name);
    if (channel < 0 || !catalog.is_temporal(static_cast<std::size_t>(channel))) {
      throw std::runtime_error(observations_csv + ":" + std::to_string(line_no) +
                               ": unknown temporal feature '" + feature_name + "'");
    }
    Observation o;
    o.feature = channel;
    o.offset_hours = parse_double(f[2], observations_csv, line_no);
    o.value = parse_double(f[3], observations_csv, line_no);
    if (o.offset_hours < 0.0 || o.offset_hours >= static_cast<double>(kHorizonHours)) {
      throw std::runtime_error(observations_csv + ":" + std::to_string(line_no) +
                               ": offset_hours outside [0, 48)");
    }
    records[it->second].observations.push_back(o);
  }
  return records;
}

}  // namespace icurisk
