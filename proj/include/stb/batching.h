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

#ifndef STB_BATCHING_H_
#define STB_BATCHING_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "stb/corpus.h"

// Annotation workload: segment items, batches, plans and worker assignment.
namespace stb::batching {

enum class ItemKind { kBotBot, kHumanHuman };

std::string_view ItemKindName(ItemKind kind);
ItemKind ParseItemKind(std::string_view name);

struct SegmentItem {
  std::string item_id;
  std::string conversation_id;
  int k = 0;
  ItemKind kind = ItemKind::kBotBot;

  bool operator==(const SegmentItem&) const = default;
};

struct Batch {
  std::string batch_id;
  std::vector<SegmentItem> items;

  bool operator==(const Batch&) const = default;
};

struct PlanConfig {
  int batch_size = 20;
  int annotators_per_item = 2;
  int max_batches = 3;
  double human_mix = 0.2;
  uint64_t rng_seed = 0;
  std::vector<int> segment_lengths;
};

std::string ItemId(std::string_view conversation_id, int k);

// Every bot-bot conversation expanded to every segment length, plus enough
// human-human conversations (each also expanded to every length) that human
// items make up the fraction of all items closest to `human_mix`.
std::vector<SegmentItem> BuildItems(const corpus::Corpus& bot_corpus,
                                    const corpus::Corpus& human_corpus,
                                    double human_mix, uint64_t rng_seed);

// Number of human conversations BuildItems draws for the given workload.
size_t HumanConversationsForMix(size_t bot_items, size_t lengths_per_conversation,
                                double human_mix);

// Places every item in exactly one batch so that no batch holds two segments
// of one conversation. Only the last batch may be short, unless a single
// conversation has more items than ceil(n / batch_size) batches, in which case
// the batch count grows to that multiplicity and sizes are balanced.
std::vector<Batch> AssembleBatches(std::span<const SegmentItem> items,
                                   int batch_size, uint64_t rng_seed);

// The full annotation plan: configuration, batches and the conversations they
// reference. Lookups are indexed on construction.
class Plan {
 public:
  Plan() = default;
  Plan(PlanConfig config, std::vector<Batch> batches,
       std::vector<corpus::Conversation> conversations);

  const PlanConfig& config() const { return config_; }
  const std::vector<Batch>& batches() const { return batches_; }
  const std::vector<corpus::Conversation>& conversations() const {
    return conversations_;
  }

  const SegmentItem* FindItem(std::string_view item_id) const;
  // Index into batches() of the batch holding `item_id`.
  std::optional<size_t> BatchOfItem(std::string_view item_id) const;
  const corpus::Conversation* FindConversation(std::string_view id) const;
  size_t item_count() const { return item_index_.size(); }

 private:
  PlanConfig config_;
  std::vector<Batch> batches_;
  std::vector<corpus::Conversation> conversations_;
  std::unordered_map<std::string, std::pair<size_t, size_t>> item_index_;
  std::unordered_map<std::string, size_t> conversation_index_;
};

Plan MakePlan(const corpus::Corpus& bot_corpus,
              const corpus::Corpus& human_corpus, const PlanConfig& config);

nlohmann::json ToJson(const Plan& plan);
Plan PlanFromJson(const nlohmann::json& j);
void SavePlan(const Plan& plan, const std::filesystem::path& path);
Plan LoadPlan(const std::filesystem::path& path);

// Plain assignment data: which worker holds which batches, and which workers
// each item was handed to.
struct LedgerState {
  std::map<std::string, std::vector<std::string>> worker_batches;
  std::map<std::string, std::vector<std::string>> item_workers;

  bool operator==(const LedgerState&) const = default;
};

// Thread-safe ledger. Claims are serialized so that no interleaving of
// concurrent claims can break the per-worker or per-item limits.
class AssignmentLedger {
 public:
  explicit AssignmentLedger(const Plan& plan);

  // Picks the least-claimed admissible batch for `worker_id` and records the
  // claim. Returns the batch index, or nullopt when nothing is admissible.
  std::optional<size_t> ClaimNext(const std::string& worker_id);

  // Records a specific claim after checking admissibility; returns an empty
  // string on success, otherwise the reason it was refused.
  std::string Claim(const std::string& worker_id, size_t batch_index);

  bool IsAssigned(const std::string& worker_id,
                  std::string_view item_id) const;
  std::vector<size_t> BatchesOf(const std::string& worker_id) const;
  LedgerState Snapshot() const;

 private:
  std::string CheckLocked(const std::string& worker_id,
                          size_t batch_index) const;
  void RecordLocked(const std::string& worker_id, size_t batch_index);

  const Plan& plan_;
  mutable std::mutex mu_;
  std::vector<std::vector<std::string>> batch_workers_;
  std::map<std::string, std::vector<size_t>> worker_batches_;
  std::map<std::string, std::set<std::string>> worker_conversations_;
};

enum class ViolationKind {
  kSharedConversationInBatch,
  kItemInMultipleBatches,
  kWorkerOverMaxBatches,
  kAnnotatorCount,
  kWorkerRepeatsConversation,
};

std::string_view ViolationKindName(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<std::string> ids;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  size_t Count(ViolationKind kind) const;
};

// Batch-level checks only.
ValidationReport ValidateBatches(std::span<const Batch> batches);

// Batch-level checks plus every ledger constraint. Never throws.
ValidationReport ValidatePlan(std::span<const Batch> batches,
                              const LedgerState& ledger,
                              const PlanConfig& config);

}  // namespace stb::batching

#endif  // STB_BATCHING_H_
