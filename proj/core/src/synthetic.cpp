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

#include "icurisk/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "icurisk/layers.hpp"  // sigmoid
#include "icurisk/rng.hpp"

namespace icurisk {

namespace {

constexpr double kMortalityPrevalence = 0.09748;

// Risk weights at signal_strength 1: shared GCS impairment, age and (negated)
// urine propensity, all standard normal latents.
constexpr double kGcsWeight = 1.8;
constexpr double kAgeWeight = 0.9;
constexpr double kUrineWeight = 0.7;

// Value model for one temporal feature. Between/within splits the marginal
// variance so per-patient levels persist across hours (what a network can
// actually learn) while hourly noise keeps series realistic.
struct ValueModel {
  enum Kind { kNormal, kLogNormal, kGcsScale } kind = kNormal;
  double p1 = 0.0;  // mean, or log-space mean
  double p2 = 1.0;  // std, or log-space std
  double between_fraction = 0.5;
  double gcs_max = 0.0;
};

ValueModel model_for(const FeatureSpec& spec) {
  ValueModel m;
  if (spec.name == "bilirubin") {
    m = {ValueModel::kLogNormal, 0.0, 1.504, 0.5, 0};
  } else if (spec.name == "bun") {
    m = {ValueModel::kLogNormal, 3.0, 0.792, 0.5, 0};
  } else if (spec.name == "po2") {
    m = {ValueModel::kLogNormal, 4.779, 0.678, 0.5, 0};
  } else if (spec.name == "wbc") {
    m = {ValueModel::kLogNormal, 2.416, 0.508, 0.5, 0};
  } else if (spec.name == "urine_output") {
    m = {ValueModel::kLogNormal, 4.248, 0.98, 0.4, 0};
  } else if (spec.name == "gcs_eyes" || spec.name == "gcs_motor" || spec.name == "gcs_verbal") {
    m = {ValueModel::kGcsScale, spec.ref_mean, spec.ref_std, 0.0, spec.max_value};
  } else {
    m = {ValueModel::kNormal, spec.ref_mean, spec.ref_std, 0.5, 0};
  }
  return m;
}

double clamp_to_bounds(double v, const FeatureSpec& spec) {
  return std::clamp(v, spec.min_value, spec.max_value);
}

double simpson_expected_sigmoid(double intercept, double sigma) {
  // E[sigmoid(intercept + sigma Z)], Z standard normal; integrand decays fast
  // so [-8, 8] is plenty.
  const int n = 400;
  const double lo = -8.0, hi = 8.0;
  const double h = (hi - lo) / n;
  auto f = [&](double z) {
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return sigmoid(intercept + sigma * z) * phi;
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

double calibrate_logistic_intercept(double sigma, double prevalence) {
  double lo = -30.0, hi = 10.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (simpson_expected_sigmoid(mid, sigma) < prevalence) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<RawPatientRecord> generate_synthetic_records(std::size_t n, std::uint64_t seed,
                                                         double signal_strength) {
  if (n < 50) {
    throw std::invalid_argument("generate_synthetic_records: need n >= 50, got " + std::to_string(n));
  }
  if (signal_strength < 0.0) {
    throw std::invalid_argument("generate_synthetic_records: signal_strength must be >= 0");
  }
  const FeatureCatalog& catalog = FeatureCatalog::standard();

  const double wg = kGcsWeight * signal_strength;
  const double wa = kAgeWeight * signal_strength;
  const double wu = kUrineWeight * signal_strength;
  const double sigma_logit = std::sqrt(wg * wg + wa * wa + wu * wu);
  const double intercept = calibrate_logistic_intercept(sigma_logit, kMortalityPrevalence);

  Rng master(Rng::derive(seed, 17));

  std::vector<RawPatientRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RawPatientRecord r;
    r.patient_id = "synth-" + std::to_string(100000 + i);
    r.admission_index = 1;
    r.stay_hours = 49.0 + master.lognormal(3.2, 0.9);

    // Patient latents.
    const double u_gcs = master.normal();    // impairment, higher is worse
    const double z_age = master.normal();
    const double u_urine = master.normal();  // urine propensity, higher is more

    const double age_raw = 63.828 + 15.576 * z_age;
    r.admission_age = std::max(age_raw, 16.016);

    r.elective_admission = master.bernoulli(catalog.at(17).ref_mean);
    r.surgical_admission = master.bernoulli(catalog.at(18).ref_mean);
    r.aids = master.bernoulli(catalog.at(19).ref_mean);
    r.metastatic_cancer = master.bernoulli(catalog.at(20).ref_mean);
    r.lymphoma = master.bernoulli(catalog.at(21).ref_mean);

    const double logit = intercept + wg * u_gcs + wa * z_age - wu * u_urine;
    r.died = master.bernoulli(sigmoid(logit)) ? 1 : 0;

    for (std::size_t f = 0; f < catalog.size(); ++f) {
      const FeatureSpec& spec = catalog.at(f);
      if (spec.kind != FeatureKind::kTemporal) continue;
      const ValueModel vm = model_for(spec);

      // Per-patient level in the model's native (possibly log) space.
      double level;
      double within_std;
      if (vm.kind == ValueModel::kGcsScale) {
        // Channel level tied to the shared impairment latent.
        const double a = 0.7, b = 0.4;
        level = vm.p1 - vm.p2 * (a * u_gcs + b * master.normal());
        within_std = vm.p2 * 0.59;
      } else {
        const double between = std::sqrt(vm.between_fraction);
        const double latent = spec.name == "urine_output" ? u_urine : master.normal();
        level = vm.p1 + vm.p2 * between * latent;
        within_std = vm.p2 * std::sqrt(1.0 - vm.between_fraction);
      }

      for (int h = 0; h < kHorizonHours; ++h) {
        if (master.bernoulli(spec.ref_missing_fraction)) continue;
        const double hour_value = level + within_std * master.normal();
        int n_obs = 1;
        if (spec.aggregator == Aggregator::kMean && master.bernoulli(0.2)) n_obs = 2;
        for (int k = 0; k < n_obs; ++k) {
          double v = hour_value;
          if (n_obs > 1) v += 0.05 * vm.p2 * master.normal();
          if (vm.kind == ValueModel::kLogNormal) {
            v = std::exp(v);
          } else if (vm.kind == ValueModel::kGcsScale) {
            v = std::round(v);
          }
          Observation o;
          o.feature = static_cast<int>(f);
          o.offset_hours = (h + 0.999 * master.uniform());
          o.value = clamp_to_bounds(v, spec);
          r.observations.push_back(o);
        }
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

CohortDataset generate_synthetic_cohort(std::size_t n, std::uint64_t seed, double signal_strength) {
  return build_cohort(generate_synthetic_records(n, seed, signal_strength), Provenance::kSynthetic);
}

}  // namespace icurisk
