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

#ifndef ICURISK_TRAINER_HPP
#define ICURISK_TRAINER_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icurisk/ingest.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/network.hpp"

namespace icurisk {

struct TrainConfig {
  double lr = 0.01;
  double decay = 1e-7;       // effective lr_t = lr / (1 + decay * step)
  double momentum = 0.9;     // Nesterov form
  int batch_size = 32;
  double pos_weight = 10.0;  // loss weight of the positive (death) class
  int epochs = 20;
  int early_stop_patience = 5;  // epochs without val-loss improvement; 0 disables
  int folds = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Weighted logarithmic loss for one example; probabilities are clamped to
// [1e-12, 1 - 1e-12] before the logs.
double weighted_log_loss(double p, int y, double pos_weight);

// SGD with Nesterov momentum and hyperbolic learning-rate decay:
//   lr_t = lr / (1 + decay * t)
//   v   <- mu * v - lr_t * g
//   w   <- w + mu * v - lr_t * g
class NesterovSgd {
 public:
  NesterovSgd(double lr, double decay, double momentum);

  // Rejects the step (throws, parameters untouched) on non-finite gradients.
  void step(std::vector<ParamRef>& params);
  std::uint64_t steps_taken() const { return step_count_; }

 private:
  double lr_;
  double decay_;
  double momentum_;
  std::uint64_t step_count_ = 0;
  std::vector<Tensor> velocity_;
};

struct FoldIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Stratified k-fold partition: validation folds are disjoint, exhaustive,
// sized within one patient of each other, and per-fold prevalence matches the
// cohort within one patient. Deterministic in the seed.
std::vector<FoldIndices> kfold_split(std::span<const int> labels, int k, std::uint64_t seed);

struct FoldReport {
  int fold_index = 0;
  int epochs_run = 0;
  std::vector<double> train_loss;  // per-epoch mean weighted loss
  std::vector<double> val_loss;
  double train_auc = 0.0;
  double val_auc = 0.0;
  double sensitivity = 0.0;  // validation, threshold 0.5
  double specificity = 0.0;
  StandardizationStats standardization;
  std::string checkpoint_path;  // filled in by callers that persist the model
};

struct FoldResult {
  FoldReport report;
  Network network;
};

// Trains one fold: standardization fitted on the training split only,
// shuffled mini-batches, optional early stopping on validation loss (the
// best-epoch parameters are restored). A zero-epoch run still primes batch
// normalization statistics with one pass so the untrained model is usable.
// Throws on divergence (non-finite loss), naming epoch and step.
FoldResult train_fold(const CohortDataset& cohort, const FoldIndices& fold, int fold_index,
                      const ModelConfig& model_config, const TrainConfig& train_config);

// All folds of a stratified cross-validation run; folds train in parallel
// when hardware allows (results are identical either way).
std::vector<FoldResult> train_cv(const CohortDataset& cohort, const ModelConfig& model_config,
                                 const TrainConfig& train_config);

std::string fold_report_to_json(const FoldReport& report);
std::string cv_summary_to_json(std::span<const FoldReport> reports);

}  // namespace icurisk

#endif  // ICURISK_TRAINER_HPP
