// Copyright 2026 The stb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STB_ANNOTATION_H_
#define STB_ANNOTATION_H_

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stb/batching.h"
#include "stb/corpus.h"

namespace stb::annotation {

// Ordered so that comparison operators give human > unsure > bot.
enum class EntityLabel { kBot = 0, kUnsure = 1, kHuman = 2 };

std::string_view LabelName(EntityLabel label);
EntityLabel ParseLabel(std::string_view name);

enum class Feature { kFluency = 0, kSpecificity = 1, kSensibleness = 2 };
inline constexpr std::array<Feature, 3> kFeatures = {
    Feature::kFluency, Feature::kSpecificity, Feature::kSensibleness};

std::string_view FeatureName(Feature feature);
Feature ParseFeature(std::string_view name);

// Which entity the annotator preferred on a feature.
enum class Choice { kFirst, kTie, kSecond };

std::string_view ChoiceName(Choice choice);
Choice ParseChoice(std::string_view name);

struct FeaturePreference {
  Feature feature;
  Choice choice;
};

struct AnnotationRecord {
  std::string item_id;
  std::string worker_id;
  std::array<EntityLabel, 2> labels = {EntityLabel::kUnsure,
                                       EntityLabel::kUnsure};
  // Indexed by Feature. Only validated records are guaranteed complete.
  std::array<std::optional<Choice>, 3> preferences;
  double duration_seconds = 0.0;
  std::string submitted_at;

  Choice preference(Feature feature) const;
  void set_preference(FeaturePreference p) {
    preferences[static_cast<size_t>(p.feature)] = p.choice;
  }
  bool operator==(const AnnotationRecord&) const = default;
};

// +1 if the entity in `slot` was preferred, -1 if the other one was, 0 on tie.
int EncodeFeature(Choice choice, int slot);
inline int EncodeFeature(const FeaturePreference& p, int slot) {
  return EncodeFeature(p.choice, slot);
}

nlohmann::json ToJson(const AnnotationRecord& record);
// Throws kParse for malformed records; an absent preference is left empty so
// that validation can report it as a missing feature.
AnnotationRecord RecordFromJson(const nlohmann::json& j);

// Checks records against a plan and, when given, an assignment ledger.
// Accepted (item, worker) pairs are remembered to catch duplicates.
class AnnotationValidator {
 public:
  AnnotationValidator(const batching::Plan& plan,
                      const batching::AssignmentLedger* ledger)
      : plan_(plan), ledger_(ledger) {}

  // Throws kUnknownItem, kUnassignedWorker, kDuplicate or kMissingFeature.
  void Validate(const AnnotationRecord& record) const;
  // Validate() then remember the pair.
  void Accept(const AnnotationRecord& record);

 private:
  const batching::Plan& plan_;
  const batching::AssignmentLedger* ledger_;
  std::set<std::pair<std::string, std::string>> seen_;
};

struct Rejection {
  size_t line = 0;
  std::string reason;
};

struct ImportResult {
  std::vector<AnnotationRecord> records;
  std::vector<Rejection> rejected;
};

// Parses one record per line and validates each in file order. Throws kParse
// on a malformed line and kPrecondition when every record is invalid.
ImportResult ImportAnnotations(const std::filesystem::path& path,
                               const batching::Plan& plan,
                               const batching::AssignmentLedger* ledger);
ImportResult ParseAnnotations(std::string_view text,
                              const batching::Plan& plan,
                              const batching::AssignmentLedger* ledger);

std::string SerializeAnnotations(std::span<const AnnotationRecord> records);
void ExportAnnotations(const std::filesystem::path& path,
                       std::span<const AnnotationRecord> records);

// An annotation joined with what the plan knows about its item: which systems
// sat in each slot and the ground-truth entity kinds.
struct Judgment {
  std::string item_id;
  std::string worker_id;
  std::string conversation_id;
  std::string domain;
  int k = 0;
  batching::ItemKind kind = batching::ItemKind::kBotBot;
  std::array<std::string, 2> systems;
  std::array<corpus::EntityKind, 2> truth = {corpus::EntityKind::kBot,
                                             corpus::EntityKind::kBot};
  std::array<EntityLabel, 2> labels = {EntityLabel::kUnsure,
                                       EntityLabel::kUnsure};
  std::array<Choice, 3> preferences = {Choice::kTie, Choice::kTie,
                                       Choice::kTie};
  double duration_seconds = 0.0;

  Choice preference(Feature f) const {
    return preferences[static_cast<size_t>(f)];
  }
  bool is_bot_bot() const { return kind == batching::ItemKind::kBotBot; }
};

// Throws kUnknownItem when a record's item is missing from the plan.
std::vector<Judgment> Resolve(std::span<const AnnotationRecord> records,
                              const batching::Plan& plan);

}  // namespace stb::annotation

#endif  // STB_ANNOTATION_H_
