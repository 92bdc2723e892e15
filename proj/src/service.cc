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

#include "stb/service.h"

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <random>

#include "stb/error.h"

namespace stb::service {
namespace {

using nlohmann::json;

std::string NewToken() {
  std::random_device rd;
  std::uniform_int_distribution<uint64_t> dist;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(dist(rd)),
                static_cast<unsigned long long>(dist(rd)));
  return buf;
}

std::string PairKey(const corpus::Conversation& c) {
  std::string a = c.entities[0].system_name;
  std::string b = c.entities[1].system_name;
  if (b < a) std::swap(a, b);
  return a + " vs " + b;
}

void Bump(ProgressCounts& counts, int done, int quota) {
  if (done >= quota) {
    ++counts.full;
  } else if (done > 0) {
    ++counts.partial;
  } else {
    ++counts.pending;
  }
}

}  // namespace

json ProgressCounts::ToJson() const {
  return {{"full", full}, {"partial", partial}, {"pending", pending}};
}

json Progress::ToJson() const {
  json pairs = json::object();
  for (const auto& [k, v] : by_pair) pairs[k] = v.ToJson();
  json lengths = json::object();
  for (const auto& [k, v] : by_length) lengths[std::to_string(k)] = v.ToJson();
  return {{"total", total.ToJson()},
          {"by_pair", pairs},
          {"by_length", lengths},
          {"annotations", annotations}};
}

AnnotationService::AnnotationService(batching::Plan plan, ServiceConfig config)
    : plan_(std::move(plan)), config_(std::move(config)) {
  std::error_code ec;
  std::filesystem::create_directories(config_.store, ec);
  if (ec) {
    throw Error(ErrorKind::kStorage,
                "cannot create store " + config_.store.string() + ": " + ec.message());
  }
  ledger_ = std::make_unique<batching::AssignmentLedger>(plan_);
  validator_ = std::make_unique<annotation::AnnotationValidator>(plan_, ledger_.get());
  tokens_log_ = std::make_unique<AppendLog>(config_.store / "tokens.jsonl");
  claims_log_ = std::make_unique<AppendLog>(config_.store / "claims.jsonl");
  annotations_log_ = std::make_unique<AppendLog>(config_.store / "annotations.jsonl");

  try {
    for (const auto& line : tokens_log_->ReadLines()) {
      const json j = json::parse(line);
      token_to_worker_[j.at("token").get<std::string>()] =
          j.at("worker_id").get<std::string>();
    }
    std::map<std::string, size_t> batch_index;
    for (size_t b = 0; b < plan_.batches().size(); ++b) {
      batch_index[plan_.batches()[b].batch_id] = b;
    }
    for (const auto& line : claims_log_->ReadLines()) {
      const json j = json::parse(line);
      const auto worker = j.at("worker_id").get<std::string>();
      const auto it = batch_index.find(j.at("batch_id").get<std::string>());
      if (it == batch_index.end()) {
        throw Error(ErrorKind::kStorage, "claim log names an unknown batch");
      }
      const std::string refused = ledger_->Claim(worker, it->second);
      if (!refused.empty()) {
        throw Error(ErrorKind::kStorage, "claim log replay refused: " + refused);
      }
    }
    for (const auto& line : annotations_log_->ReadLines()) {
      auto record = annotation::RecordFromJson(json::parse(line));
      validator_->Accept(record);
      ++item_counts_[record.item_id];
      done_.insert({record.worker_id, record.item_id});
      records_.push_back(std::move(record));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kStorage, std::string("corrupt store: ") + e.what());
  }
}

std::string AnnotationService::IssueToken() {
  std::unique_lock lock(mu_);
  std::string token = NewToken();
  while (token_to_worker_.contains(token)) token = NewToken();
  const std::string worker = "w" + std::to_string(token_to_worker_.size() + 1);
  tokens_log_->Append(json{{"token", token}, {"worker_id", worker}}.dump());
  token_to_worker_[token] = worker;
  return token;
}

std::optional<std::string> AnnotationService::WorkerOf(const std::string& token) const {
  std::shared_lock lock(mu_);
  const auto it = token_to_worker_.find(token);
  if (it == token_to_worker_.end()) return std::nullopt;
  return it->second;
}

bool AnnotationService::IsAdmin(const std::string& token) const {
  return !config_.admin_token.empty() && token == config_.admin_token;
}

bool AnnotationService::BatchDoneLocked(const std::string& worker_id,
                                        size_t batch_index) const {
  for (const auto& item : plan_.batches()[batch_index].items) {
    if (!done_.contains({worker_id, item.item_id})) return false;
  }
  return true;
}

std::optional<size_t> AnnotationService::NextBatch(const std::string& worker_id) {
  std::unique_lock lock(mu_);
  for (size_t b : ledger_->BatchesOf(worker_id)) {
    if (!BatchDoneLocked(worker_id, b)) return b;
  }
  const auto claimed = ledger_->ClaimNext(worker_id);
  if (!claimed) return std::nullopt;
  claims_log_->Append(
      json{{"worker_id", worker_id}, {"batch_id", plan_.batches()[*claimed].batch_id}}
          .dump());
  return claimed;
}

uint64_t AnnotationService::Submit(const annotation::AnnotationRecord& record) {
  std::unique_lock lock(mu_);
  validator_->Validate(record);
  const uint64_t offset = annotations_log_->Append(annotation::ToJson(record).dump());
  validator_->Accept(record);
  ++item_counts_[record.item_id];
  done_.insert({record.worker_id, record.item_id});
  records_.push_back(record);
  return offset;
}

std::set<std::string> AnnotationService::DoneItems(const std::string& worker_id,
                                                   size_t batch_index) const {
  std::shared_lock lock(mu_);
  std::set<std::string> out;
  for (const auto& item : plan_.batches().at(batch_index).items) {
    if (done_.contains({worker_id, item.item_id})) out.insert(item.item_id);
  }
  return out;
}

Progress AnnotationService::GetProgress() const {
  std::shared_lock lock(mu_);
  Progress p;
  const int quota = plan_.config().annotators_per_item;
  for (const auto& batch : plan_.batches()) {
    for (const auto& item : batch.items) {
      const auto it = item_counts_.find(item.item_id);
      const int done = it == item_counts_.end() ? 0 : it->second;
      const corpus::Conversation* c = plan_.FindConversation(item.conversation_id);
      Bump(p.total, done, quota);
      Bump(p.by_pair[c ? PairKey(*c) : "?"], done, quota);
      Bump(p.by_length[item.k], done, quota);
    }
  }
  p.annotations = records_.size();
  return p;
}

std::string AnnotationService::ExportLog() const {
  std::shared_lock lock(mu_);
  return annotations_log_->ReadAll();
}

std::vector<annotation::AnnotationRecord> AnnotationService::Records() const {
  std::shared_lock lock(mu_);
  return records_;
}

batching::LedgerState AnnotationService::LedgerSnapshot() const {
  return ledger_->Snapshot();
}

json RenderBatch(const batching::Plan& plan, size_t batch_index,
                 const std::set<std::string>& done_items) {
  const batching::Batch& batch = plan.batches().at(batch_index);
  json items = json::array();
  for (const auto& item : batch.items) {
    const corpus::Conversation* c = plan.FindConversation(item.conversation_id);
    if (c == nullptr) {
      throw Error(ErrorKind::kUnknownItem, "conversation of item " + item.item_id);
    }
    const corpus::Segment segment = corpus::MakeSegment(*c, item.k);
    json exchanges = json::array();
    for (const auto& e : segment.conversation.exchanges) {
      json turns = json::array();
      for (const auto& t : e.turns) {
        turns.push_back({{"speaker", t.slot == 0 ? "Speaker A" : "Speaker B"},
                         {"text", t.text}});
      }
      exchanges.push_back({{"index", e.index}, {"turns", turns}});
    }
    items.push_back({{"item_id", item.item_id},
                     {"k", item.k},
                     {"exchanges", exchanges},
                     {"done", done_items.contains(item.item_id)}});
  }
  return {{"batch_id", batch.batch_id}, {"items", items}};
}

}  // namespace stb::service
