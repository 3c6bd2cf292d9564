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

#ifndef ICURISK_METRICS_HPP
#define ICURISK_METRICS_HPP

#include <span>

namespace icurisk {

// Probability that a random positive outscores a random negative, ties at
// half weight (midrank convention). Requires both classes present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct OperatingPoint {
  double sensitivity = 0.0;
  double specificity = 0.0;
};

// 2x2 table at a decision threshold; predicted positive iff score >= threshold.
OperatingPoint operating_point(std::span<const double> scores, std::span<const int> labels,
                               double threshold);

}  // namespace icurisk

#endif  // ICURISK_METRICS_HPP
