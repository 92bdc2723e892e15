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

#include "stb/batching.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_set>
#include <utility>

#include "stb/error.h"
#include "stb/rng.h"

namespace stb::batching {
namespace {

using nlohmann::json;

constexpr int kRestartAttempts = 1000;

struct ConversationGroup {
  std::string conversation_id;
  std::vector<size_t> items;  // indices into the input span
};

std::vector<size_t> Capacities(size_t n, size_t batch_count,
                               size_t batch_size, bool balanced) {
  std::vector<size_t> caps(batch_count, 0);
  if (balanced) {
    for (size_t b = 0; b < batch_count; ++b) {
      caps[b] = n / batch_count + (b < n % batch_count ? 1 : 0);
    }
  } else {
    for (size_t b = 0; b + 1 < batch_count; ++b) caps[b] = batch_size;
    caps[batch_count - 1] = n - (batch_count - 1) * batch_size;
  }
  return caps;
}

// One placement attempt. `best_fit` packs conversations into the fullest open
// batches, which keeps a conversation's segments in the same few batches;
// otherwise batches with the most room are preferred (ties broken randomly).
bool TryAssign(const std::vector<ConversationGroup>& groups,
               std::vector<size_t> remaining, bool best_fit, Rng& rng,
               std::vector<std::vector<size_t>>& placement) {
  const size_t batch_count = remaining.size();
  placement.assign(batch_count, {});
  std::vector<size_t> order(groups.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return groups[a].items.size() > groups[b].items.size();
  });

  std::vector<size_t> batch_order(batch_count);
  std::vector<uint64_t> jitter(batch_count);
  for (size_t g : order) {
    const auto& group = groups[g];
    std::iota(batch_order.begin(), batch_order.end(), size_t{0});
    for (auto& j : jitter) j = best_fit ? 0 : rng();
    std::sort(batch_order.begin(), batch_order.end(), [&](size_t a, size_t b) {
      const bool open_a = remaining[a] > 0;
      const bool open_b = remaining[b] > 0;
      if (open_a != open_b) return open_a;
      if (remaining[a] != remaining[b]) {
        return best_fit ? remaining[a] < remaining[b]
                        : remaining[a] > remaining[b];
      }
      if (jitter[a] != jitter[b]) return jitter[a] < jitter[b];
      return a < b;
    });
    if (group.items.size() > batch_count ||
        remaining[batch_order[group.items.size() - 1]] == 0) {
      return false;
    }
    std::vector<size_t> chosen(batch_order.begin(),
                               batch_order.begin() + group.items.size());
    std::sort(chosen.begin(), chosen.end());
    for (size_t i = 0; i < chosen.size(); ++i) {
      placement[chosen[i]].push_back(group.items[i]);
      --remaining[chosen[i]];
    }
  }
  return true;
}

std::string FormatIndex(const char* prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04zu", prefix, i);
  return buf;
}

}  // namespace

std::string_view ItemKindName(ItemKind kind) {
  return kind == ItemKind::kBotBot ? "bot_bot" : "human_human";
}

ItemKind ParseItemKind(std::string_view name) {
  if (name == "bot_bot") return ItemKind::kBotBot;
  if (name == "human_human") return ItemKind::kHumanHuman;
  throw Error(ErrorKind::kParse, "unknown item kind \"" + std::string(name) + "\"");
}

std::string ItemId(std::string_view conversation_id, int k) {
  // Opaque: annotators see item ids, and source ids may give away humans.
  char buf[24];
  std::snprintf(buf, sizeof(buf), "item-%016llx",
                static_cast<unsigned long long>(DeriveSeed(
                    HashString(conversation_id), static_cast<uint64_t>(k))));
  return buf;
}

size_t HumanConversationsForMix(size_t bot_items,
                                size_t lengths_per_conversation,
                                double human_mix) {
  if (human_mix <= 0.0 || bot_items == 0 || lengths_per_conversation == 0) {
    return 0;
  }
  // h / (bot_items + h) is increasing in h, so scan until it passes the
  // target and keep the closest candidate (smaller on ties).
  size_t best = 0;
  double best_gap = human_mix;
  for (size_t conversations = 1;; ++conversations) {
    const double h = static_cast<double>(conversations * lengths_per_conversation);
    const double fraction = h / (static_cast<double>(bot_items) + h);
    const double gap = std::abs(fraction - human_mix);
    if (gap < best_gap) {
      best_gap = gap;
      best = conversations;
    }
    if (fraction >= human_mix) break;
  }
  return best;
}

std::vector<SegmentItem> BuildItems(const corpus::Corpus& bot_corpus,
                                    const corpus::Corpus& human_corpus,
                                    double human_mix, uint64_t rng_seed) {
  if (!(human_mix >= 0.0 && human_mix < 1.0)) {
    throw Error(ErrorKind::kPrecondition, "human_mix must be in [0, 1)");
  }
  const auto& lengths = bot_corpus.segment_lengths;
  if (lengths.empty()) {
    throw Error(ErrorKind::kPrecondition, "no segment lengths configured");
  }
  corpus::CheckSegmentLengths(lengths);

  std::vector<SegmentItem> items;
  for (const auto& c : bot_corpus.conversations) {
    if (!c.is_bot_bot()) {
      throw Error(ErrorKind::kPrecondition,
                  "conversation " + c.id + " in the bot corpus is not bot-bot");
    }
    for (int k : lengths) {
      if (c.length() < static_cast<size_t>(k)) {
        throw Error(ErrorKind::kInvariant,
                    "conversation " + c.id + " is shorter than " +
                        std::to_string(k));
      }
      items.push_back({ItemId(c.id, k), c.id, k, ItemKind::kBotBot});
    }
  }

  if (human_mix > 0.0 && human_corpus.conversations.empty()) {
    throw Error(ErrorKind::kPrecondition,
                "human_mix > 0 but the human corpus is empty");
  }
  const size_t wanted =
      HumanConversationsForMix(items.size(), lengths.size(), human_mix);
  if (wanted > human_corpus.conversations.size()) {
    throw Error(ErrorKind::kPrecondition,
                "human mix needs " + std::to_string(wanted) +
                    " human conversations, only " +
                    std::to_string(human_corpus.conversations.size()) +
                    " available");
  }
  std::vector<size_t> order(human_corpus.conversations.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng = MakeRng(rng_seed, 0);
  Shuffle(order.begin(), order.end(), rng);
  for (size_t i = 0; i < wanted; ++i) {
    const auto& c = human_corpus.conversations[order[i]];
    if (c.is_bot_bot()) {
      throw Error(ErrorKind::kPrecondition,
                  "conversation " + c.id + " in the human corpus is bot-bot");
    }
    for (int k : lengths) {
      if (c.length() < static_cast<size_t>(k)) {
        throw Error(ErrorKind::kInvariant,
                    "conversation " + c.id + " is shorter than " +
                        std::to_string(k));
      }
      items.push_back({ItemId(c.id, k), c.id, k, ItemKind::kHumanHuman});
    }
  }
  return items;
}

std::vector<Batch> AssembleBatches(std::span<const SegmentItem> items,
                                   int batch_size, uint64_t rng_seed) {
  if (batch_size <= 0) {
    throw Error(ErrorKind::kPrecondition, "batch_size must be positive");
  }
  if (items.empty()) return {};

  std::vector<ConversationGroup> groups;
  std::unordered_map<std::string, size_t> group_of;
  std::unordered_set<std::string> seen_items;
  for (size_t i = 0; i < items.size(); ++i) {
    if (!seen_items.insert(items[i].item_id).second) {
      throw Error(ErrorKind::kPrecondition,
                  "duplicate item " + items[i].item_id);
    }
    auto [it, inserted] =
        group_of.try_emplace(items[i].conversation_id, groups.size());
    if (inserted) groups.push_back({items[i].conversation_id, {}});
    groups[it->second].items.push_back(i);
  }
  for (auto& g : groups) {
    std::sort(g.items.begin(), g.items.end(), [&](size_t a, size_t b) {
      return items[a].k < items[b].k;
    });
  }

  const size_t n = items.size();
  const size_t size = static_cast<size_t>(batch_size);
  const size_t by_size = (n + size - 1) / size;
  size_t multiplicity = 0;
  for (const auto& g : groups) multiplicity = std::max(multiplicity, g.items.size());
  const size_t batch_count = std::max(by_size, multiplicity);

  Rng rng = MakeRng(rng_seed, 0);
  std::vector<std::vector<size_t>> placement;
  bool placed = false;
  // Full batches first; if the short remainder cannot hold every
  // conversation, balanced capacities always can (round-robin).
  for (bool balanced : {batch_count != by_size, true}) {
    const auto caps = Capacities(n, batch_count, size, balanced);
    for (int attempt = 0; attempt < kRestartAttempts && !placed; ++attempt) {
      placed = TryAssign(groups, caps, attempt == 0, rng, placement);
    }
    if (placed || balanced) break;
  }
  if (!placed) {
    throw Error(ErrorKind::kUnsatisfiable,
                "cannot place " + std::to_string(n) + " items into " +
                    std::to_string(batch_count) +
                    " batches without repeating a conversation in a batch");
  }

  std::vector<Batch> batches(batch_count);
  for (size_t b = 0; b < batch_count; ++b) {
    Shuffle(placement[b].begin(), placement[b].end(), rng);
    batches[b].batch_id = FormatIndex("batch-", b);
    for (size_t i : placement[b]) batches[b].items.push_back(items[i]);
  }
  return batches;
}

Plan::Plan(PlanConfig config, std::vector<Batch> batches,
           std::vector<corpus::Conversation> conversations)
    : config_(std::move(config)),
      batches_(std::move(batches)),
      conversations_(std::move(conversations)) {
  for (size_t c = 0; c < conversations_.size(); ++c) {
    if (!conversation_index_.emplace(conversations_[c].id, c).second) {
      throw Error(ErrorKind::kInvariant,
                  "duplicate conversation " + conversations_[c].id);
    }
  }
  for (size_t b = 0; b < batches_.size(); ++b) {
    for (size_t i = 0; i < batches_[b].items.size(); ++i) {
      const SegmentItem& item = batches_[b].items[i];
      if (!conversation_index_.contains(item.conversation_id)) {
        throw Error(ErrorKind::kInvariant,
                    "item " + item.item_id + " references unknown conversation " +
                        item.conversation_id);
      }
      if (!item_index_.emplace(item.item_id, std::make_pair(b, i)).second) {
        throw Error(ErrorKind::kInvariant,
                    "item " + item.item_id + " appears in more than one batch");
      }
    }
  }
}

const SegmentItem* Plan::FindItem(std::string_view item_id) const {
  auto it = item_index_.find(std::string(item_id));
  if (it == item_index_.end()) return nullptr;
  return &batches_[it->second.first].items[it->second.second];
}

std::optional<size_t> Plan::BatchOfItem(std::string_view item_id) const {
  auto it = item_index_.find(std::string(item_id));
  if (it == item_index_.end()) return std::nullopt;
  return it->second.first;
}

const corpus::Conversation* Plan::FindConversation(std::string_view id) const {
  auto it = conversation_index_.find(std::string(id));
  if (it == conversation_index_.end()) return nullptr;
  return &conversations_[it->second];
}

Plan MakePlan(const corpus::Corpus& bot_corpus,
              const corpus::Corpus& human_corpus, const PlanConfig& config) {
  PlanConfig cfg = config;
  cfg.segment_lengths = bot_corpus.segment_lengths;
  auto items = BuildItems(bot_corpus, human_corpus, cfg.human_mix, cfg.rng_seed);
  auto batches = AssembleBatches(items, cfg.batch_size,
                                 DeriveSeed(cfg.rng_seed, 1));
  std::unordered_set<std::string> used;
  for (const auto& item : items) used.insert(item.conversation_id);
  std::vector<corpus::Conversation> conversations;
  for (const auto* source : {&bot_corpus, &human_corpus}) {
    for (const auto& c : source->conversations) {
      if (used.contains(c.id)) conversations.push_back(c);
    }
  }
  return Plan(std::move(cfg), std::move(batches), std::move(conversations));
}

json ToJson(const Plan& plan) {
  const PlanConfig& cfg = plan.config();
  json batches = json::array();
  for (const auto& batch : plan.batches()) {
    json items = json::array();
    for (const auto& item : batch.items) {
      items.push_back({{"item_id", item.item_id},
                       {"conversation_id", item.conversation_id},
                       {"k", item.k},
                       {"kind", ItemKindName(item.kind)}});
    }
    batches.push_back({{"batch_id", batch.batch_id}, {"items", std::move(items)}});
  }
  json conversations = json::array();
  for (const auto& c : plan.conversations()) {
    conversations.push_back(corpus::ToJson(c));
  }
  return {{"config",
           {{"batch_size", cfg.batch_size},
            {"annotators_per_item", cfg.annotators_per_item},
            {"max_batches", cfg.max_batches},
            {"human_mix", cfg.human_mix},
            {"rng_seed", cfg.rng_seed},
            {"segment_lengths", cfg.segment_lengths}}},
          {"batches", std::move(batches)},
          {"conversations", std::move(conversations)}};
}

Plan PlanFromJson(const json& j) {
  try {
    const json& c = j.at("config");
    PlanConfig cfg;
    cfg.batch_size = c.value("batch_size", 20);
    cfg.annotators_per_item = c.value("annotators_per_item", 2);
    cfg.max_batches = c.value("max_batches", 3);
    cfg.human_mix = c.value("human_mix", 0.2);
    cfg.rng_seed = c.value("rng_seed", uint64_t{0});
    cfg.segment_lengths = c.value("segment_lengths", std::vector<int>{});
    std::vector<Batch> batches;
    for (const json& b : j.at("batches")) {
      Batch batch;
      batch.batch_id = b.at("batch_id").get<std::string>();
      for (const json& item : b.at("items")) {
        batch.items.push_back(
            {item.at("item_id").get<std::string>(),
             item.at("conversation_id").get<std::string>(),
             item.at("k").get<int>(),
             ParseItemKind(item.at("kind").get<std::string>())});
      }
      batches.push_back(std::move(batch));
    }
    std::vector<corpus::Conversation> conversations;
    if (j.contains("conversations")) {
      for (const json& conv : j.at("conversations")) {
        conversations.push_back(corpus::ConversationFromJson(conv));
      }
    }
    return Plan(std::move(cfg), std::move(batches), std::move(conversations));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("plan: ") + e.what());
  }
}

void SavePlan(const Plan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kStorage, "cannot write " + path.string());
  out << ToJson(plan).dump(1) << '\n';
}

Plan LoadPlan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  try {
    return PlanFromJson(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

AssignmentLedger::AssignmentLedger(const Plan& plan)
    : plan_(plan), batch_workers_(plan.batches().size()) {}

std::string AssignmentLedger::CheckLocked(const std::string& worker_id,
                                          size_t batch_index) const {
  const auto& cfg = plan_.config();
  if (batch_index >= plan_.batches().size()) return "no such batch";
  const auto& workers = batch_workers_[batch_index];
  if (std::find(workers.begin(), workers.end(), worker_id) != workers.end()) {
    return "worker already holds this batch";
  }
  if (workers.size() >= static_cast<size_t>(cfg.annotators_per_item)) {
    return "batch already has its annotators";
  }
  auto held = worker_batches_.find(worker_id);
  if (held != worker_batches_.end() &&
      held->second.size() >= static_cast<size_t>(cfg.max_batches)) {
    return "worker reached max_batches";
  }
  auto seen = worker_conversations_.find(worker_id);
  if (seen != worker_conversations_.end()) {
    for (const auto& item : plan_.batches()[batch_index].items) {
      if (seen->second.contains(item.conversation_id)) {
        return "worker already saw conversation " + item.conversation_id;
      }
    }
  }
  return {};
}

void AssignmentLedger::RecordLocked(const std::string& worker_id,
                                    size_t batch_index) {
  batch_workers_[batch_index].push_back(worker_id);
  worker_batches_[worker_id].push_back(batch_index);
  auto& seen = worker_conversations_[worker_id];
  for (const auto& item : plan_.batches()[batch_index].items) {
    seen.insert(item.conversation_id);
  }
}

std::optional<size_t> AssignmentLedger::ClaimNext(const std::string& worker_id) {
  std::lock_guard lock(mu_);
  std::optional<size_t> best;
  for (size_t b = 0; b < batch_workers_.size(); ++b) {
    if (best && batch_workers_[b].size() >= batch_workers_[*best].size()) {
      continue;
    }
    if (CheckLocked(worker_id, b).empty()) best = b;
  }
  if (best) RecordLocked(worker_id, *best);
  return best;
}

std::string AssignmentLedger::Claim(const std::string& worker_id,
                                    size_t batch_index) {
  std::lock_guard lock(mu_);
  std::string reason = CheckLocked(worker_id, batch_index);
  if (reason.empty()) RecordLocked(worker_id, batch_index);
  return reason;
}

bool AssignmentLedger::IsAssigned(const std::string& worker_id,
                                  std::string_view item_id) const {
  const auto batch = plan_.BatchOfItem(item_id);
  if (!batch) return false;
  std::lock_guard lock(mu_);
  const auto& workers = batch_workers_[*batch];
  return std::find(workers.begin(), workers.end(), worker_id) != workers.end();
}

std::vector<size_t> AssignmentLedger::BatchesOf(
    const std::string& worker_id) const {
  std::lock_guard lock(mu_);
  auto it = worker_batches_.find(worker_id);
  return it == worker_batches_.end() ? std::vector<size_t>{} : it->second;
}

LedgerState AssignmentLedger::Snapshot() const {
  std::lock_guard lock(mu_);
  LedgerState state;
  for (const auto& [worker, batches] : worker_batches_) {
    auto& ids = state.worker_batches[worker];
    for (size_t b : batches) ids.push_back(plan_.batches()[b].batch_id);
  }
  for (size_t b = 0; b < batch_workers_.size(); ++b) {
    for (const auto& item : plan_.batches()[b].items) {
      state.item_workers[item.item_id] = batch_workers_[b];
    }
  }
  return state;
}

std::string_view ViolationKindName(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kSharedConversationInBatch:
      return "shared conversation in batch";
    case ViolationKind::kItemInMultipleBatches:
      return "item in multiple batches";
    case ViolationKind::kWorkerOverMaxBatches:
      return "worker over max_batches";
    case ViolationKind::kAnnotatorCount:
      return "annotator count";
    case ViolationKind::kWorkerRepeatsConversation:
      return "worker sees conversation twice";
  }
  return "violation";
}

size_t ValidationReport::Count(ViolationKind kind) const {
  return static_cast<size_t>(
      std::count_if(violations.begin(), violations.end(),
                    [&](const Violation& v) { return v.kind == kind; }));
}

ValidationReport ValidateBatches(std::span<const Batch> batches) {
  ValidationReport report;
  std::unordered_map<std::string, std::string> item_batch;
  for (const auto& batch : batches) {
    std::unordered_map<std::string, std::string> conv_item;
    for (const auto& item : batch.items) {
      auto [it, fresh] = conv_item.emplace(item.conversation_id, item.item_id);
      if (!fresh) {
        report.violations.push_back(
            {ViolationKind::kSharedConversationInBatch,
             {batch.batch_id, item.conversation_id, it->second, item.item_id},
             "batch " + batch.batch_id + " holds two segments of " +
                 item.conversation_id});
      }
      auto [bt, first] = item_batch.emplace(item.item_id, batch.batch_id);
      if (!first) {
        report.violations.push_back(
            {ViolationKind::kItemInMultipleBatches,
             {item.item_id, bt->second, batch.batch_id},
             "item " + item.item_id + " is in " + bt->second + " and " +
                 batch.batch_id});
      }
    }
  }
  return report;
}

ValidationReport ValidatePlan(std::span<const Batch> batches,
                              const LedgerState& ledger,
                              const PlanConfig& config) {
  ValidationReport report = ValidateBatches(batches);

  std::unordered_map<std::string, const Batch*> by_id;
  for (const auto& batch : batches) by_id.emplace(batch.batch_id, &batch);

  for (const auto& [worker, held] : ledger.worker_batches) {
    if (held.size() > static_cast<size_t>(config.max_batches)) {
      Violation v{ViolationKind::kWorkerOverMaxBatches, {worker},
                  "worker " + worker + " holds " + std::to_string(held.size()) +
                      " batches (max " + std::to_string(config.max_batches) +
                      ")"};
      v.ids.insert(v.ids.end(), held.begin(), held.end());
      report.violations.push_back(std::move(v));
    }
    std::unordered_map<std::string, std::string> seen;  // conversation -> batch
    for (const auto& batch_id : held) {
      auto it = by_id.find(batch_id);
      if (it == by_id.end()) continue;
      std::unordered_set<std::string> in_this_batch;
      for (const auto& item : it->second->items) {
        if (!in_this_batch.insert(item.conversation_id).second) continue;
        auto [prev, fresh] = seen.emplace(item.conversation_id, batch_id);
        if (!fresh) {
          report.violations.push_back(
              {ViolationKind::kWorkerRepeatsConversation,
               {worker, item.conversation_id, prev->second, batch_id},
               "worker " + worker + " sees " + item.conversation_id +
                   " in " + prev->second + " and " + batch_id});
        }
      }
    }
  }

  for (const auto& batch : batches) {
    for (const auto& item : batch.items) {
      auto it = ledger.item_workers.find(item.item_id);
      std::vector<std::string> workers;
      if (it != ledger.item_workers.end()) workers = it->second;
      std::sort(workers.begin(), workers.end());
      workers.erase(std::unique(workers.begin(), workers.end()), workers.end());
      const size_t raw = it == ledger.item_workers.end() ? 0 : it->second.size();
      if (workers.size() != static_cast<size_t>(config.annotators_per_item) ||
          raw != workers.size()) {
        report.violations.push_back(
            {ViolationKind::kAnnotatorCount,
             {item.item_id},
             "item " + item.item_id + " has " + std::to_string(workers.size()) +
                 " distinct annotators (want " +
                 std::to_string(config.annotators_per_item) + ")"});
      }
    }
  }
  return report;
}

}  // namespace stb::batching
