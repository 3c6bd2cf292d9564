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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "icurisk/attribution.hpp"
#include "icurisk/io.hpp"
#include "icurisk/metrics.hpp"
#include "icurisk/report.hpp"
#include "icurisk/shapley.hpp"
#include "icurisk/synthetic.hpp"
#include "icurisk/trainer.hpp"

namespace fs = std::filesystem;
using namespace icurisk;

namespace {

const PatientMatrix& find_patient(const CohortDataset& cohort, const std::string& id) {
  for (const PatientMatrix& p : cohort.patients) {
    if (p.patient_id == id) return p;
  }
  throw std::runtime_error("patient '" + id + "' not found in cohort");
}

std::vector<std::pair<std::string, int>> load_labels_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file");
  std::vector<std::pair<std::string, int>> labels;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path + ": expected patient_id,label");
    labels.emplace_back(line.substr(0, comma), std::stoi(line.substr(comma + 1)));
  }
  return labels;
}

int run_synth(const std::string& out, std::size_t n, std::uint64_t seed, double signal) {
  const CohortDataset cohort = generate_synthetic_cohort(n, seed, signal);
  save_cohort(out, cohort);
  std::size_t deaths = 0;
  for (const PatientMatrix& p : cohort.patients) deaths += p.label;
  std::cout << "wrote " << cohort.patients.size() << " patients (" << deaths << " deaths, "
            << 100.0 * static_cast<double>(deaths) / static_cast<double>(cohort.patients.size())
            << "% prevalence) to " << out << "\n";
  return 0;
}

int run_ingest(const std::string& patients, const std::string& observations,
               const std::string& out) {
  std::vector<RawPatientRecord> records = load_patient_records(patients, observations);
  const std::size_t before = records.size();
  const CohortDataset cohort = build_cohort(std::move(records), Provenance::kExternal);
  save_cohort(out, cohort);
  std::cout << "read " << before << " patients, " << cohort.patients.size()
            << " passed entry criteria; wrote " << out << "\n";
  return 0;
}

int run_train(const std::string& cohort_path, const std::string& out_dir, ModelConfig model_config,
              TrainConfig train_config) {
  const CohortDataset cohort = load_cohort(cohort_path);
  fs::create_directories(out_dir);

  std::vector<FoldResult> results = train_cv(cohort, model_config, train_config);
  std::vector<FoldReport> reports;
  for (FoldResult& r : results) {
    const std::string ckpt =
        (fs::path(out_dir) / ("fold_" + std::to_string(r.report.fold_index) + ".ckpt")).string();
    save_checkpoint(ckpt, r.network, model_config, r.report.standardization);
    r.report.checkpoint_path = ckpt;
    const std::string report_path =
        (fs::path(out_dir) / ("fold_" + std::to_string(r.report.fold_index) + ".json")).string();
    write_text_file(report_path, fold_report_to_json(r.report));
    reports.push_back(r.report);
    std::cout << "fold " << r.report.fold_index << ": val AUC " << r.report.val_auc
              << ", sensitivity " << r.report.sensitivity << ", specificity "
              << r.report.specificity << " (" << r.report.epochs_run << " epochs)\n";
  }
  const std::string summary = cv_summary_to_json(reports);
  write_text_file((fs::path(out_dir) / "summary.json").string(), summary);
  std::cout << summary << "\n";
  return 0;
}

int run_evaluate(const std::string& checkpoint_path, const std::string& cohort_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const CohortDataset cohort = load_cohort(cohort_path);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const PatientMatrix& p : cohort.patients) {
    scores.push_back(ckpt.network.predict(standardize_apply(p.grid, ckpt.standardization)));
    labels.push_back(p.label);
  }
  const double auc = roc_auc(scores, labels);
  const OperatingPoint op = operating_point(scores, labels, 0.5);
  std::cout << "n=" << scores.size() << "  AUC=" << auc << "  sensitivity=" << op.sensitivity
            << "  specificity=" << op.specificity << "  (threshold 0.5)\n";
  return 0;
}

int run_attribute(const std::string& checkpoint_path, const std::string& cohort_path,
                  const std::string& patient_id, const std::string& target_name,
                  const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const CohortDataset cohort = load_cohort(cohort_path);
  const PatientMatrix& patient = find_patient(cohort, patient_id);
  const OutputTarget target =
      target_name == "prob" ? OutputTarget::kProbability : OutputTarget::kLogit;

  const Tensor x = standardize_apply(patient.grid, ckpt.standardization);
  const Tensor reference = zero_reference(x.size(0), x.size(1));
  AttributionMap map = attribute(ckpt.network, x, reference, target);
  map.patient_id = patient_id;
  write_text_file(out, attribution_map_to_json(map));
  std::cout << "patient " << patient_id << ": delta=" << map.delta
            << " additivity_residual=" << map.additivity_residual << " -> " << out << "\n";
  return 0;
}

int run_verify_shapley(const std::string& checkpoint_path, const std::string& cohort_path,
                       const std::string& patient_id, const std::string& groups_name,
                       int n_samples, std::uint64_t seed, const std::string& out) {
  if (groups_name != "per-channel") {
    throw std::runtime_error("unsupported --groups value '" + groups_name +
                             "' (only per-channel is available)");
  }
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const CohortDataset cohort = load_cohort(cohort_path);
  const PatientMatrix& patient = find_patient(cohort, patient_id);

  const Tensor x = standardize_apply(patient.grid, ckpt.standardization);
  const Tensor reference = zero_reference(x.size(0), x.size(1));
  const GroupPartition groups = per_channel_groups(x.size(0), x.size(1));
  const int n_groups = static_cast<int>(groups.size());

  const AttributionMap map = attribute(ckpt.network, x, reference, OutputTarget::kLogit);
  std::vector<double> deeplift_sums(groups.size(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t idx : groups[g]) deeplift_sums[g] += map.contributions[idx];
  }

  std::vector<double> shapley_values;
  std::vector<double> std_errors(groups.size(), 0.0);
  std::string method;
  if (n_groups <= kMaxExactShapleyPlayers) {
    method = "exact";
    const CoalitionalGame game =
        model_game(ckpt.network, x, reference, groups, OutputTarget::kLogit);
    shapley_values = exact_shapley(game).values;
  } else {
    // Exact enumeration is capped at 20 players (2^n forward passes); above
    // that the unbiased permutation sampler stands in, with standard errors.
    method = "sampled";
    Rng rng(seed);
    const auto est = sampled_shapley(
        [&](const Tensor& t) { return ckpt.network.predict_logit(t); }, x, reference, groups,
        n_samples, rng);
    shapley_values = est.values;
    std_errors = est.std_error;
  }

  double max_abs = 0.0, mean_abs = 0.0;
  std::size_t agree = 0, considered = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double d = std::abs(shapley_values[g] - deeplift_sums[g]);
    max_abs = std::max(max_abs, d);
    mean_abs += d;
    if (shapley_values[g] != 0.0 || deeplift_sums[g] != 0.0) {
      ++considered;
      if ((shapley_values[g] >= 0.0) == (deeplift_sums[g] >= 0.0)) ++agree;
    }
  }
  mean_abs /= static_cast<double>(groups.size());

  nlohmann::json j;
  j["patient_id"] = patient_id;
  j["method"] = method;
  j["target"] = "logit";
  if (method == "sampled") j["n_samples"] = n_samples;
  j["delta"] = map.delta;
  nlohmann::json rows = nlohmann::json::array();
  const FeatureCatalog& catalog = FeatureCatalog::standard();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    nlohmann::json row = {{"feature", catalog.at(g).name},
                          {"shapley", shapley_values[g]},
                          {"deeplift", deeplift_sums[g]}};
    if (method == "sampled") row["std_error"] = std_errors[g];
    rows.push_back(std::move(row));
  }
  j["groups"] = std::move(rows);
  j["disagreement"] = {{"max_abs", max_abs},
                       {"mean_abs", mean_abs},
                       {"sign_agreement",
                        considered ? static_cast<double>(agree) / static_cast<double>(considered)
                                   : 1.0}};
  write_text_file(out, j.dump(2));
  std::cout << "verify-shapley (" << method << "): max |shapley - deeplift| = " << max_abs
            << ", mean = " << mean_abs << " -> " << out << "\n";
  return 0;
}

int run_report(const std::string& maps_dir, const std::string& labels_path,
               const std::string& kind, const std::string& format_name, const std::string& out,
               const std::string& patient_filter) {
  const RenderFormat format = parse_render_format(format_name);

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(maps_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .json attribution maps in " + maps_dir);

  std::vector<AttributionMap> maps;
  for (const std::string& f : files) maps.push_back(attribution_map_from_json(read_text_file(f)));

  auto pick_single = [&]() -> const AttributionMap& {
    if (!patient_filter.empty()) {
      for (const AttributionMap& m : maps) {
        if (m.patient_id == patient_filter) return m;
      }
      throw std::runtime_error("no map for patient '" + patient_filter + "' in " + maps_dir);
    }
    if (maps.size() != 1) {
      throw std::runtime_error("found " + std::to_string(maps.size()) +
                               " maps; pass --patient to choose one");
    }
    return maps.front();
  };

  std::string rendered;
  if (kind == "marginal") {
    rendered = render_marginal(marginal_importance(pick_single()), format);
  } else if (kind == "hourly") {
    rendered = render_hourly(pick_single(), format);
  } else if (kind == "posneg") {
    rendered = render_posneg(pick_single(), format);
  } else if (kind == "dataset") {
    if (labels_path.empty()) throw std::runtime_error("--labels is required for kind=dataset");
    const auto label_rows = load_labels_csv(labels_path);
    std::vector<int> labels;
    for (const AttributionMap& m : maps) {
      const auto it = std::find_if(label_rows.begin(), label_rows.end(),
                                   [&](const auto& kv) { return kv.first == m.patient_id; });
      if (it == label_rows.end()) {
        throw std::runtime_error("no label for patient '" + m.patient_id + "' in " + labels_path);
      }
      labels.push_back(it->second);
    }
    rendered = render_dataset(dataset_importance(maps, labels), format);
  } else {
    throw std::runtime_error("unknown report kind '" + kind +
                             "' (expected marginal, hourly, posneg or dataset)");
  }
  write_text_file(out, rendered);
  std::cout << "wrote " << kind << " report (" << format_name << ") to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale convolutional ICU mortality risk model with "
               "Shapley-value-based explanations"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  std::size_t synth_n = 5000;
  std::uint64_t synth_seed = 0;
  double synth_signal = 1.0;
  std::string synth_out = "cohort.bin";
  synth->add_option("--n", synth_n, "Number of patients (>= 50)");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--signal", synth_signal, "Planted risk signal strength");
  synth->add_option("--out", synth_out, "Output cohort container")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a cohort from CSV files");
  std::string ingest_patients, ingest_observations, ingest_out;
  ingest->add_option("--patients", ingest_patients, "patients.csv")->required();
  ingest->add_option("--observations", ingest_observations, "observations.csv")->required();
  ingest->add_option("--out", ingest_out, "Output cohort container")->required();

  // train
  auto* train = app.add_subcommand("train", "Cross-validated training");
  std::string train_cohort, train_out = "runs";
  ModelConfig model_config;
  TrainConfig train_config;
  train->add_option("--cohort", train_cohort, "Cohort container")->required();
  train->add_option("--out", train_out, "Output directory for reports and checkpoints");
  train->add_option("--folds", train_config.folds, "Cross-validation folds");
  train->add_option("--seed", train_config.seed, "Split/shuffle/dropout seed");
  train->add_option("--epochs", train_config.epochs, "Training epochs per fold");
  train->add_option("--patience", train_config.early_stop_patience,
                    "Early-stop patience in epochs (0 disables)");
  train->add_option("--lr", train_config.lr, "Learning rate");
  train->add_option("--decay", train_config.decay, "Learning-rate decay");
  train->add_option("--momentum", train_config.momentum, "Nesterov momentum");
  train->add_option("--batch", train_config.batch_size, "Mini-batch size");
  train->add_option("--pos-weight", train_config.pos_weight, "Positive-class loss weight");
  train->add_option("--filters", model_config.filters_per_scale, "Filters per temporal scale");
  train->add_option("--hidden", model_config.hidden_units, "Hidden dense units");
  train->add_option("--model-seed", model_config.seed, "Weight initialization seed");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "AUC and operating point of a checkpoint");
  std::string eval_checkpoint, eval_cohort;
  evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--cohort", eval_cohort, "Cohort container")->required();

  // attribute
  auto* attr = app.add_subcommand("attribute", "Per-patient contribution map");
  std::string attr_checkpoint, attr_cohort, attr_patient, attr_out = "map.json";
  std::string attr_target = "logit";
  attr->add_option("--checkpoint", attr_checkpoint, "Checkpoint file")->required();
  attr->add_option("--cohort", attr_cohort, "Cohort container")->required();
  attr->add_option("--patient", attr_patient, "Patient id")->required();
  attr->add_option("--target", attr_target, "logit or prob")
      ->check(CLI::IsMember({"logit", "prob"}));
  attr->add_option("--out", attr_out, "Output map.json");

  // verify-shapley
  auto* verify = app.add_subcommand(
      "verify-shapley", "Compare attributions against coalitional Shapley values");
  std::string ver_checkpoint, ver_cohort, ver_patient, ver_groups = "per-channel";
  std::string ver_out = "shapley_report.json";
  int ver_samples = 200;
  std::uint64_t ver_seed = 0;
  verify->add_option("--checkpoint", ver_checkpoint, "Checkpoint file")->required();
  verify->add_option("--cohort", ver_cohort, "Cohort container")->required();
  verify->add_option("--patient", ver_patient, "Patient id")->required();
  verify->add_option("--groups", ver_groups, "Grouping (per-channel)");
  verify->add_option("--samples", ver_samples,
                     "Permutation samples when the group count exceeds the exact cap");
  verify->add_option("--seed", ver_seed, "Sampler seed");
  verify->add_option("--out", ver_out, "Output report.json");

  // report
  auto* report = app.add_subcommand("report", "Render explanation artifacts");
  std::string rep_maps, rep_labels, rep_kind, rep_format = "json", rep_out, rep_patient;
  report->add_option("--maps", rep_maps, "Directory of attribution map .json files")->required();
  report->add_option("--labels", rep_labels, "patient_id,label CSV (kind=dataset)");
  report->add_option("--kind", rep_kind, "marginal, hourly, posneg or dataset")->required();
  report->add_option("--format", rep_format, "json, csv or svg");
  report->add_option("--out", rep_out, "Output file")->required();
  report->add_option("--patient", rep_patient, "Patient id when the maps directory has several");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(synth_out, synth_n, synth_seed, synth_signal);
    if (ingest->parsed()) return run_ingest(ingest_patients, ingest_observations, ingest_out);
    if (train->parsed()) return run_train(train_cohort, train_out, model_config, train_config);
    if (evaluate->parsed()) return run_evaluate(eval_checkpoint, eval_cohort);
    if (attr->parsed()) {
      return run_attribute(attr_checkpoint, attr_cohort, attr_patient, attr_target, attr_out);
    }
    if (verify->parsed()) {
      return run_verify_shapley(ver_checkpoint, ver_cohort, ver_patient, ver_groups, ver_samples,
                                ver_seed, ver_out);
    }
    if (report->parsed()) {
      return run_report(rep_maps, rep_labels, rep_kind, rep_format, rep_out, rep_patient);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
