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

#include "icurisk/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace icurisk {

namespace {

constexpr char kCheckpointMagic[8] = {'I', 'C', 'R', 'K', 'P', 'T', '0', '1'};
constexpr char kCohortMagic[8] = {'I', 'C', 'R', 'C', 'H', 'T', '0', '1'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) u64(d);
    raw(t.data(), t.numel() * sizeof(double));
  }
  const std::vector<unsigned char>& bytes() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  std::int32_t i32() {
    std::int32_t v;
    raw(&v, 4);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  std::vector<double> doubles() {
    const std::uint64_t n = u64();
    std::vector<double> v(n);
    raw(v.data(), n * sizeof(double));
    return v;
  }
  Tensor tensor() {
    const std::uint32_t rank = u32();
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) shape[i] = u64();
    std::vector<double> data(shape_numel(shape));
    raw(data.data(), data.size() * sizeof(double));
    return Tensor(std::move(shape), std::move(data));
  }
  bool done() const { return pos_ == size_; }

 private:
  void raw(void* p, std::size_t n) {
    if (pos_ + n > size_) throw std::runtime_error("binary container truncated");
    std::memcpy(p, data_ + pos_, n);
    pos_ += n;
  }
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for " + path);
}

std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.seekg(0, std::ios::end);
  const std::streamsize size = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw std::runtime_error("read failed for " + path);
  return bytes;
}

void check_magic(Reader& r, const char (&magic)[8], const std::string& what) {
  char got[8];
  for (char& c : got) c = static_cast<char>(r.u8());
  if (std::memcmp(got, magic, 8) != 0) {
    throw std::runtime_error(what + ": bad magic, not a recognized container");
  }
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw std::runtime_error(what + ": unsupported container version " + std::to_string(version));
  }
}

void write_network(Writer& w, const Network& net) {
  w.u32(static_cast<std::uint32_t>(net.num_layers()));
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const Layer& layer = net.layer(i);
    w.u8(static_cast<std::uint8_t>(layer.kind()));
    switch (layer.kind()) {
      case LayerKind::kMultiScaleConv1d: {
        const auto& conv = static_cast<const MultiScaleConv1dLayer&>(layer);
        w.u32(static_cast<std::uint32_t>(conv.branches().size()));
        for (const Conv1d& b : conv.branches()) {
          w.u8(b.padding() == Padding::kSame ? 0 : 1);
          w.tensor(b.kernels());
          w.tensor(b.bias());
        }
        break;
      }
      case LayerKind::kAvgPool1d: {
        const auto& pool = static_cast<const AvgPool1dLayer&>(layer);
        w.u64(pool.window());
        w.u64(pool.stride());
        break;
      }
      case LayerKind::kBatchNorm: {
        const auto& bn = static_cast<const BatchNormLayer&>(layer);
        w.u64(bn.features());
        w.f64(bn.epsilon());
        w.f64(bn.momentum());
        w.tensor(bn.scale());
        w.tensor(bn.shift());
        w.tensor(bn.running_mean());
        w.tensor(bn.running_var());
        w.u64(bn.steps_seen());
        break;
      }
      case LayerKind::kDropout:
        w.f64(static_cast<const DropoutLayer&>(layer).keep_prob());
        break;
      case LayerKind::kDense: {
        const auto& dense = static_cast<const DenseLayer&>(layer);
        w.tensor(dense.weights());
        w.tensor(dense.bias());
        break;
      }
      case LayerKind::kRelu:
      case LayerKind::kSigmoid:
      case LayerKind::kFlatten:
        break;
    }
  }
}

Network read_network(Reader& r) {
  const std::uint32_t n_layers = r.u32();
  std::vector<std::unique_ptr<Layer>> layers;
  layers.reserve(n_layers);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto kind = static_cast<LayerKind>(r.u8());
    switch (kind) {
      case LayerKind::kMultiScaleConv1d: {
        const std::uint32_t n_branches = r.u32();
        std::vector<Conv1d> branches;
        branches.reserve(n_branches);
        for (std::uint32_t b = 0; b < n_branches; ++b) {
          const Padding padding = r.u8() == 0 ? Padding::kSame : Padding::kValid;
          Tensor kernels = r.tensor();
          Tensor bias = r.tensor();
          branches.emplace_back(std::move(kernels), std::move(bias), padding);
        }
        layers.push_back(std::make_unique<MultiScaleConv1dLayer>(std::move(branches)));
        break;
      }
      case LayerKind::kAvgPool1d: {
        const std::size_t window = r.u64();
        const std::size_t stride = r.u64();
        layers.push_back(std::make_unique<AvgPool1dLayer>(window, stride));
        break;
      }
      case LayerKind::kBatchNorm: {
        const std::size_t features = r.u64();
        const double eps = r.f64();
        const double momentum = r.f64();
        auto bn = std::make_unique<BatchNormLayer>(features, eps, momentum);
        bn->scale() = r.tensor();
        bn->shift() = r.tensor();
        Tensor mean = r.tensor();
        Tensor var = r.tensor();
        Tensor rm = mean, rv = var;
        const std::uint64_t steps = r.u64();
        bn->set_running_stats(std::move(rm), std::move(rv), steps);
        layers.push_back(std::move(bn));
        break;
      }
      case LayerKind::kDropout:
        layers.push_back(std::make_unique<DropoutLayer>(r.f64()));
        break;
      case LayerKind::kDense: {
        Tensor weights = r.tensor();
        Tensor bias = r.tensor();
        layers.push_back(std::make_unique<DenseLayer>(std::move(weights), std::move(bias)));
        break;
      }
      case LayerKind::kRelu:
        layers.push_back(std::make_unique<ReluLayer>());
        break;
      case LayerKind::kSigmoid:
        layers.push_back(std::make_unique<SigmoidLayer>());
        break;
      case LayerKind::kFlatten:
        layers.push_back(std::make_unique<FlattenLayer>());
        break;
      default:
        throw std::runtime_error("checkpoint: unknown layer kind " +
                                 std::to_string(static_cast<int>(kind)));
    }
  }
  return Network(std::move(layers));
}

void write_config(Writer& w, const ModelConfig& c) {
  w.i32(c.channels);
  w.i32(c.horizon_hours);
  w.i32(c.filters_per_scale);
  w.u32(static_cast<std::uint32_t>(c.scales.size()));
  for (int s : c.scales) w.i32(s);
  w.i32(c.hidden_units);
  w.f64(c.dropout_keep);
  w.i32(c.pool_window);
  w.i32(c.pool_stride);
  w.f64(c.batchnorm_epsilon);
  w.f64(c.batchnorm_momentum);
  w.u8(c.batchnorm_before_dropout ? 1 : 0);
  w.u64(c.seed);
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  c.channels = r.i32();
  c.horizon_hours = r.i32();
  c.filters_per_scale = r.i32();
  const std::uint32_t n_scales = r.u32();
  c.scales.clear();
  for (std::uint32_t i = 0; i < n_scales; ++i) c.scales.push_back(r.i32());
  c.hidden_units = r.i32();
  c.dropout_keep = r.f64();
  c.pool_window = r.i32();
  c.pool_stride = r.i32();
  c.batchnorm_epsilon = r.f64();
  c.batchnorm_momentum = r.f64();
  c.batchnorm_before_dropout = r.u8() != 0;
  c.seed = r.u64();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& network, const ModelConfig& config,
                     const StandardizationStats& standardization) {
  Writer w;
  for (char c : kCheckpointMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kFormatVersion);
  write_config(w, config);
  w.doubles(standardization.mean);
  w.doubles(standardization.stddev);
  write_network(w, network);
  write_bytes(path, w.bytes());
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::vector<unsigned char> bytes = read_bytes(path);
  Reader r(bytes.data(), bytes.size());
  check_magic(r, kCheckpointMagic, "checkpoint " + path);
  Checkpoint ckpt;
  ckpt.config = read_config(r);
  ckpt.standardization.mean = r.doubles();
  ckpt.standardization.stddev = r.doubles();
  ckpt.network = read_network(r);
  return ckpt;
}

std::vector<unsigned char> network_to_bytes(const Network& network) {
  Writer w;
  write_network(w, network);
  return w.bytes();
}

Network network_from_bytes(const std::vector<unsigned char>& bytes) {
  Reader r(bytes.data(), bytes.size());
  return read_network(r);
}

void save_cohort(const std::string& path, const CohortDataset& cohort) {
  Writer w;
  for (char c : kCohortMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(cohort.provenance));

  const FeatureCatalog& catalog = FeatureCatalog::standard();
  w.u32(static_cast<std::uint32_t>(catalog.size()));
  for (const FeatureSpec& s : catalog.all()) w.str(s.name);
  w.doubles(cohort.stats.mean);
  w.doubles(cohort.stats.stddev);
  w.u64(cohort.stats.count.size());
  for (std::uint64_t c : cohort.stats.count) w.u64(c);

  w.u64(cohort.patients.size());
  for (const PatientMatrix& p : cohort.patients) {
    w.str(p.patient_id);
    w.u8(static_cast<std::uint8_t>(p.label));
    w.tensor(p.grid);
  }
  write_bytes(path, w.bytes());
}

CohortDataset load_cohort(const std::string& path) {
  const std::vector<unsigned char> bytes = read_bytes(path);
  Reader r(bytes.data(), bytes.size());
  check_magic(r, kCohortMagic, "cohort " + path);
  CohortDataset cohort;
  cohort.provenance = static_cast<Provenance>(r.u8());

  const std::uint32_t n_features = r.u32();
  const FeatureCatalog& catalog = FeatureCatalog::standard();
  if (n_features != catalog.size()) {
    throw std::runtime_error("cohort " + path + ": holds " + std::to_string(n_features) +
                             " features, expected " + std::to_string(catalog.size()));
  }
  for (std::uint32_t i = 0; i < n_features; ++i) {
    const std::string name = r.str();
    if (name != catalog.at(i).name) {
      throw std::runtime_error("cohort " + path + ": feature " + std::to_string(i) + " is '" +
                               name + "', expected '" + catalog.at(i).name + "'");
    }
  }
  cohort.stats.mean = r.doubles();
  cohort.stats.stddev = r.doubles();
  const std::uint64_t n_counts = r.u64();
  cohort.stats.count.resize(n_counts);
  for (std::uint64_t i = 0; i < n_counts; ++i) cohort.stats.count[i] = r.u64();

  const std::uint64_t n_patients = r.u64();
  cohort.patients.reserve(n_patients);
  for (std::uint64_t i = 0; i < n_patients; ++i) {
    PatientMatrix p;
    p.patient_id = r.str();
    p.label = r.u8();
    p.grid = r.tensor();
    cohort.patients.push_back(std::move(p));
  }
  if (!r.done()) throw std::runtime_error("cohort " + path + ": trailing bytes");
  return cohort;
}

std::string attribution_map_to_json(const AttributionMap& map, const FeatureCatalog& catalog) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["patient_id"] = map.patient_id;
  j["target"] = map.target == OutputTarget::kLogit ? "logit" : "probability";
  j["feature_names"] = catalog.names();
  j["reference_output"] = map.reference_output;
  j["actual_output"] = map.actual_output;
  j["delta"] = map.delta;
  j["additivity_residual"] = map.additivity_residual;
  j["predicted_probability"] =
      map.target == OutputTarget::kLogit ? sigmoid(map.actual_output) : map.actual_output;

  const std::size_t C = map.contributions.size(0), T = map.contributions.size(1);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < C; ++c) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t t = 0; t < T; ++t) row.push_back(map.contributions.at(c, t));
    rows.push_back(std::move(row));
  }
  j["contributions"] = std::move(rows);
  return j.dump(2);
}

AttributionMap attribution_map_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  AttributionMap map;
  map.patient_id = j.at("patient_id").get<std::string>();
  map.target =
      j.at("target").get<std::string>() == "logit" ? OutputTarget::kLogit : OutputTarget::kProbability;
  map.reference_output = j.at("reference_output").get<double>();
  map.actual_output = j.at("actual_output").get<double>();
  map.delta = j.at("delta").get<double>();
  map.additivity_residual = j.at("additivity_residual").get<double>();

  const auto& rows = j.at("contributions");
  const std::size_t C = rows.size();
  if (C == 0) throw std::runtime_error("attribution map: empty contribution grid");
  const std::size_t T = rows[0].size();
  map.contributions = Tensor({C, T});
  for (std::size_t c = 0; c < C; ++c) {
    if (rows[c].size() != T) throw std::runtime_error("attribution map: ragged contribution grid");
    for (std::size_t t = 0; t < T; ++t) map.contributions.at(c, t) = rows[c][t].get<double>();
  }
  return map;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace icurisk
