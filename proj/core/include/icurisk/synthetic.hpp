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

#ifndef ICURISK_SYNTHETIC_HPP
#define ICURISK_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "icurisk/ingest.hpp"

namespace icurisk {

// Generates a desk-scale cohort whose marginals track the catalog's
// reference statistics (feature means/stds, per-feature missingness, 9.748%
// mortality prevalence). Labels are drawn from a known monotone risk model:
// higher GCS impairment, higher age and lower urine output raise the logit,
// so the task is learnable by construction. signal_strength scales the risk
// weights (0 removes the signal entirely).
//
// Records satisfy the entry criteria by construction (stay > 48 h, age > 16,
// first admission). Requires n >= 50.
std::vector<RawPatientRecord> generate_synthetic_records(std::size_t n, std::uint64_t seed,
                                                         double signal_strength = 1.0);

// Records run through the regular ingest pipeline (cohort statistics,
// imputation, matrix construction).
CohortDataset generate_synthetic_cohort(std::size_t n, std::uint64_t seed,
                                        double signal_strength = 1.0);

// Calibrated intercept a such that E[sigmoid(a + sigma * Z)] = prevalence for
// standard normal Z; exposed for the generator's tests.
double calibrate_logistic_intercept(double sigma, double prevalence);

}  // namespace icurisk

#endif  // ICURISK_SYNTHETIC_HPP
