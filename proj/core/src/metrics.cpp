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

#include "icurisk/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace icurisk {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("metrics: scores and labels differ in length");
  }
  if (scores.empty()) throw std::invalid_argument("metrics: empty input");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y == 1) {
      has_pos = true;
    } else if (y == 0) {
      has_neg = true;
    } else {
      throw std::invalid_argument("metrics: labels must be 0 or 1");
    }
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("metrics: both classes must be present");
  }
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks: tied scores share the average of their rank range.
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1) {
      rank_sum_pos += rank[k];
      ++n_pos;
    }
  }
  const std::size_t n_neg = n - n_pos;
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

OperatingPoint operating_point(std::span<const double> scores, std::span<const int> labels,
                               double threshold) {
  check_inputs(scores, labels);
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const bool predicted_positive = scores[k] >= threshold;
    if (labels[k] == 1) {
      predicted_positive ? ++tp : ++fn;
    } else {
      predicted_positive ? ++fp : ++tn;
    }
  }
  OperatingPoint op;
  op.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
  op.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return op;
}

}  // namespace icurisk
