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

#include "icurisk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace icurisk {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (decay < 0.0) throw std::invalid_argument("TrainConfig: decay must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
  }
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (pos_weight < 1.0) throw std::invalid_argument("TrainConfig: pos_weight must be >= 1");
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (early_stop_patience < 0) throw std::invalid_argument("TrainConfig: patience must be >= 0");
  if (folds < 2) throw std::invalid_argument("TrainConfig: folds must be >= 2");
}

double weighted_log_loss(double p, int y, double pos_weight) {
  constexpr double eps = 1e-12;
  p = std::clamp(p, eps, 1.0 - eps);
  return y == 1 ? -pos_weight * std::log(p) : -std::log(1.0 - p);
}

NesterovSgd::NesterovSgd(double lr, double decay, double momentum)
    : lr_(lr), decay_(decay), momentum_(momentum) {
  if (!(lr_ > 0.0)) throw std::invalid_argument("NesterovSgd: lr must be > 0");
  if (momentum_ < 0.0 || momentum_ >= 1.0) {
    throw std::invalid_argument("NesterovSgd: momentum must lie in [0, 1)");
  }
}

void NesterovSgd::step(std::vector<ParamRef>& params) {
  if (velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const ParamRef& p : params) velocity_.push_back(p.value->zeros_like());
  }
  if (velocity_.size() != params.size()) {
    throw std::invalid_argument("NesterovSgd: parameter list changed between steps");
  }
  for (const ParamRef& p : params) {
    if (!p.grad->all_finite()) {
      throw std::runtime_error("NesterovSgd: non-finite gradient in " + p.name + "; step rejected");
    }
  }
  const double lr_t = lr_ / (1.0 + decay_ * static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& v = velocity_[i];
    Tensor& w = *params[i].value;
    const Tensor& g = *params[i].grad;
    for (std::size_t j = 0; j < w.numel(); ++j) {
      v[j] = momentum_ * v[j] - lr_t * g[j];
      w[j] += momentum_ * v[j] - lr_t * g[j];
    }
  }
  ++step_count_;
}

std::vector<FoldIndices> kfold_split(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
  if (static_cast<std::size_t>(k) > labels.size()) {
    throw std::invalid_argument("kfold_split: k exceeds cohort size");
  }
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? positives : negatives).push_back(i);
  }
  Rng rng(Rng::derive(seed, 7));
  rng.shuffle(positives);
  rng.shuffle(negatives);

  std::vector<std::vector<std::size_t>> val_sets(k);
  // Deal positives round-robin, then continue the deal with the negatives so
  // total fold sizes stay within one of each other.
  std::size_t cursor = 0;
  for (std::size_t i : positives) val_sets[cursor++ % k].push_back(i);
  for (std::size_t i : negatives) val_sets[cursor++ % k].push_back(i);

  std::vector<FoldIndices> folds(k);
  std::vector<int> fold_of(labels.size(), -1);
  for (int f = 0; f < k; ++f) {
    for (std::size_t i : val_sets[f]) fold_of[i] = f;
  }
  for (int f = 0; f < k; ++f) {
    folds[f].val = std::move(val_sets[f]);
    std::sort(folds[f].val.begin(), folds[f].val.end());
    folds[f].train.reserve(labels.size() - folds[f].val.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (fold_of[i] != f) folds[f].train.push_back(i);
    }
  }
  return folds;
}

namespace {

struct Split {
  std::vector<Tensor> x;
  std::vector<int> y;
};

Split standardized_split(const CohortDataset& cohort, std::span<const std::size_t> indices,
                         const StandardizationStats& stats) {
  Split s;
  s.x.reserve(indices.size());
  s.y.reserve(indices.size());
  for (std::size_t i : indices) {
    s.x.push_back(standardize_apply(cohort.patients[i].grid, stats));
    s.y.push_back(cohort.patients[i].label);
  }
  return s;
}

std::vector<double> predict_all(const Network& net, std::span<const Tensor> xs) {
  std::vector<double> p;
  p.reserve(xs.size());
  for (const Tensor& x : xs) p.push_back(net.predict(x));
  return p;
}

double mean_weighted_loss(std::span<const double> p, std::span<const int> y, double pos_weight) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += weighted_log_loss(p[i], y[i], pos_weight);
  return acc / static_cast<double>(p.size());
}

struct NetworkState {
  std::vector<Tensor> params;
  std::vector<Tensor> bn_means, bn_vars;
  std::vector<std::uint64_t> bn_steps;
};

NetworkState capture_state(Network& net) {
  NetworkState st;
  for (const ParamRef& p : net.parameters()) st.params.push_back(*p.value);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    if (net.layer(i).kind() != LayerKind::kBatchNorm) continue;
    auto& bn = static_cast<BatchNormLayer&>(net.layer(i));
    st.bn_means.push_back(bn.running_mean());
    st.bn_vars.push_back(bn.running_var());
    st.bn_steps.push_back(bn.steps_seen());
  }
  return st;
}

void restore_state(Network& net, const NetworkState& st) {
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = st.params[i];
  std::size_t b = 0;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    if (net.layer(i).kind() != LayerKind::kBatchNorm) continue;
    auto& bn = static_cast<BatchNormLayer&>(net.layer(i));
    bn.set_running_stats(st.bn_means[b], st.bn_vars[b], st.bn_steps[b]);
    ++b;
  }
}

}  // namespace

FoldResult train_fold(const CohortDataset& cohort, const FoldIndices& fold, int fold_index,
                      const ModelConfig& model_config, const TrainConfig& train_config) {
  train_config.validate();
  if (fold.train.empty() || fold.val.empty()) {
    throw std::invalid_argument("train_fold: fold has an empty split");
  }

  FoldResult result;
  result.report.fold_index = fold_index;

  std::vector<PatientMatrix> train_view;
  train_view.reserve(fold.train.size());
  for (std::size_t i : fold.train) train_view.push_back(cohort.patients[i]);
  const StandardizationStats stats = standardize_fit(train_view);
  result.report.standardization = stats;
  train_view.clear();
  train_view.shrink_to_fit();

  const Split train = standardized_split(cohort, fold.train, stats);
  const Split val = standardized_split(cohort, fold.val, stats);

  Rng init_rng(Rng::derive(model_config.seed, 0x6d6f64ULL + static_cast<std::uint64_t>(fold_index)));
  Network net = build_model(model_config, init_rng);
  Rng rng(Rng::derive(train_config.seed, 0x747261ULL + static_cast<std::uint64_t>(fold_index)));

  NesterovSgd optimizer(train_config.lr, train_config.decay, train_config.momentum);
  auto params = net.parameters();
  const std::size_t n_train = train.x.size();
  const std::size_t batch = static_cast<std::size_t>(train_config.batch_size);
  const std::size_t logit_end = net.logit_end();

  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  NetworkState best_state;
  int stale_epochs = 0;

  if (train_config.epochs == 0) {
    // Statistics priming: one train-mode pass with no parameter updates so
    // batch normalization has running statistics to serve inference with.
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t stop = std::min(n_train, start + batch);
      std::vector<Tensor> xs(train.x.begin() + start, train.x.begin() + stop);
      net.forward(xs, Mode::kTrain, &rng, logit_end);
    }
  }

  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t stop = std::min(n_train, start + batch);
      const std::size_t b = stop - start;
      std::vector<Tensor> xs;
      xs.reserve(b);
      std::vector<int> ys(b);
      for (std::size_t i = 0; i < b; ++i) {
        xs.push_back(train.x[order[start + i]]);
        ys[i] = train.y[order[start + i]];
      }

      std::vector<Tensor> logits = net.forward(xs, Mode::kTrain, &rng, logit_end);
      std::vector<Tensor> grads;
      grads.reserve(b);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const double z = logits[i][0];
        const double p = sigmoid(z);
        batch_loss += weighted_log_loss(p, ys[i], train_config.pos_weight);
        Tensor g({1});
        // d/dz of the mean weighted loss
        g[0] = (ys[i] == 1 ? train_config.pos_weight * (p - 1.0) : p) / static_cast<double>(b);
        grads.push_back(std::move(g));
      }
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train_fold: divergence (non-finite loss) in fold " +
                                 std::to_string(fold_index) + ", epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss;

      net.zero_grads();
      net.backward(grads, logit_end);
      optimizer.step(params);
    }
    result.report.train_loss.push_back(epoch_loss / static_cast<double>(n_train));

    // Validation loss in inference mode, chunked to bound cache memory.
    double vloss = 0.0;
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < val.x.size(); start += kChunk) {
      const std::size_t stop = std::min(val.x.size(), start + kChunk);
      for (std::size_t i = start; i < stop; ++i) {
        vloss += weighted_log_loss(net.predict(val.x[i]), val.y[i], train_config.pos_weight);
      }
    }
    vloss /= static_cast<double>(val.x.size());
    result.report.val_loss.push_back(vloss);
    result.report.epochs_run = epoch + 1;

    if (train_config.early_stop_patience > 0) {
      if (vloss < best_val) {
        best_val = vloss;
        best_state = capture_state(net);
        stale_epochs = 0;
      } else if (++stale_epochs >= train_config.early_stop_patience) {
        break;
      }
    }
  }

  if (train_config.early_stop_patience > 0 && !best_state.params.empty()) {
    restore_state(net, best_state);
  }

  const std::vector<double> train_scores = predict_all(net, train.x);
  const std::vector<double> val_scores = predict_all(net, val.x);
  result.report.train_auc = roc_auc(train_scores, train.y);
  result.report.val_auc = roc_auc(val_scores, val.y);
  const OperatingPoint op = operating_point(val_scores, val.y, 0.5);
  result.report.sensitivity = op.sensitivity;
  result.report.specificity = op.specificity;
  result.network = std::move(net);
  return result;
}

std::vector<FoldResult> train_cv(const CohortDataset& cohort, const ModelConfig& model_config,
                                 const TrainConfig& train_config) {
  std::vector<int> labels;
  labels.reserve(cohort.patients.size());
  for (const PatientMatrix& p : cohort.patients) labels.push_back(p.label);
  const std::vector<FoldIndices> folds =
      kfold_split(labels, train_config.folds, train_config.seed);

  std::vector<FoldResult> results(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers = std::min<std::size_t>(hw, folds.size());

  if (n_workers <= 1) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      results[f] = train_fold(cohort, folds[f], static_cast<int>(f), model_config, train_config);
    }
    return results;
  }

  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&, w]() {
      for (std::size_t f = w; f < folds.size(); f += n_workers) {
        try {
          results[f] =
              train_fold(cohort, folds[f], static_cast<int>(f), model_config, train_config);
        } catch (...) {
          errors[f] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::string fold_report_to_json(const FoldReport& report) {
  nlohmann::json j;
  j["fold_index"] = report.fold_index;
  j["epochs_run"] = report.epochs_run;
  j["train_loss"] = report.train_loss;
  j["val_loss"] = report.val_loss;
  j["train_auc"] = report.train_auc;
  j["val_auc"] = report.val_auc;
  j["sensitivity"] = report.sensitivity;
  j["specificity"] = report.specificity;
  j["standardization"] = {{"mean", report.standardization.mean},
                          {"stddev", report.standardization.stddev}};
  if (!report.checkpoint_path.empty()) j["checkpoint"] = report.checkpoint_path;
  return j.dump(2);
}

std::string cv_summary_to_json(std::span<const FoldReport> reports) {
  nlohmann::json j;
  double mean = 0.0;
  for (const FoldReport& r : reports) mean += r.val_auc;
  mean /= static_cast<double>(reports.size());
  double var = 0.0;
  for (const FoldReport& r : reports) var += (r.val_auc - mean) * (r.val_auc - mean);
  var /= static_cast<double>(reports.size());
  j["folds"] = reports.size();
  j["val_auc_mean"] = mean;
  j["val_auc_std"] = std::sqrt(var);
  nlohmann::json per_fold = nlohmann::json::array();
  for (const FoldReport& r : reports) {
    per_fold.push_back({{"fold_index", r.fold_index},
                        {"val_auc", r.val_auc},
                        {"train_auc", r.train_auc},
                        {"sensitivity", r.sensitivity},
                        {"specificity", r.specificity},
                        {"epochs_run", r.epochs_run},
                        {"checkpoint", r.checkpoint_path}});
  }
  j["per_fold"] = per_fold;
  return j.dump(2);
}

}  // namespace icurisk
