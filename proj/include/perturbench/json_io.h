//
// Copyright 2026 The Perturbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef PERTURBENCH_JSON_IO_H_
#define PERTURBENCH_JSON_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturbench/types.h"

namespace perturbench {

using Json = nlohmann::json;

void to_json(Json& j, const OptionSet& o);
void from_json(const Json& j, OptionSet& o);
void to_json(Json& j, const DataPrimitive& p);
void from_json(const Json& j, DataPrimitive& p);
void to_json(Json& j, const PerturbationRecord& r);
void from_json(const Json& j, PerturbationRecord& r);
void to_json(Json& j, const AttackConfig& c);
void from_json(const Json& j, AttackConfig& c);
void to_json(Json& j, const ModelAnswer& a);
void from_json(const Json& j, ModelAnswer& a);

// A perturbed sample serializes with the materialized attacked primitive
// under "primitive" when one is supplied, so downstream stages can run it
// without re-joining against the clean file.
Json PerturbedSampleToJson(const PerturbedSample& s,
                           const DataPrimitive* materialized = nullptr);
PerturbedSample PerturbedSampleFromJson(const Json& j);

// One JSON document per line; blank lines are skipped. Throws ParseError
// with the 1-based line number on malformed input.
std::vector<Json> ReadJsonLines(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void WriteJsonLines(const std::filesystem::path& path,
                    const std::vector<Json>& rows);
void WriteTextFile(const std::filesystem::path& path,
                   const std::string& contents);
std::string ReadTextFile(const std::filesystem::path& path);

std::vector<DataPrimitive> ReadPrimitives(const std::filesystem::path& path);
void WritePrimitives(const std::filesystem::path& path,
                     const std::vector<DataPrimitive>& items);

}  // namespace perturbench

#endif  // PERTURBENCH_JSON_IO_H_
