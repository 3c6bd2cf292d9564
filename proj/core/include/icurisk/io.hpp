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

#ifndef ICURISK_IO_HPP
#define ICURISK_IO_HPP

#include <string>
#include <vector>

#include "icurisk/attribution.hpp"
#include "icurisk/ingest.hpp"
#include "icurisk/network.hpp"

namespace icurisk {

// Versioned binary containers, little-endian, raw 64-bit doubles throughout:
// load(save(x)) reproduces every bit.

struct Checkpoint {
  ModelConfig config;
  Network network;
  StandardizationStats standardization;
};

void save_checkpoint(const std::string& path, const Network& network, const ModelConfig& config,
                     const StandardizationStats& standardization);
Checkpoint load_checkpoint(const std::string& path);

// In-memory round trip of the network section; used for snapshots and tests.
std::vector<unsigned char> network_to_bytes(const Network& network);
Network network_from_bytes(const std::vector<unsigned char>& bytes);

void save_cohort(const std::string& path, const CohortDataset& cohort);
CohortDataset load_cohort(const std::string& path);

// Attribution map JSON: the full contribution grid with feature names, both
// outputs, the delta and the additivity residual for auditability.
std::string attribution_map_to_json(const AttributionMap& map,
                                    const FeatureCatalog& catalog = FeatureCatalog::standard());
AttributionMap attribution_map_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace icurisk

#endif  // ICURISK_IO_HPP
