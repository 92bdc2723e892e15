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

#ifndef STB_SERVICE_H_
#define STB_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "stb/annotation.h"
#include "stb/append_log.h"
#include "stb/batching.h"

namespace stb::service {

struct ServiceConfig {
  std::filesystem::path store;
  // Required for export; empty disables the endpoint.
  std::string admin_token;
};

struct ProgressCounts {
  int full = 0;
  int partial = 0;
  int pending = 0;

  nlohmann::json ToJson() const;
};

struct Progress {
  ProgressCounts total;
  // Keyed "A vs B" with names sorted; human-human items under "human vs human".
  std::map<std::string, ProgressCounts> by_pair;
  std::map<int, ProgressCounts> by_length;
  size_t annotations = 0;

  nlohmann::json ToJson() const;
};

// Annotation collection state: plan, ledger and the durable logs under
// `store` (tokens.jsonl, claims.jsonl, annotations.jsonl). Existing logs are
// replayed on construction. Claims and submissions are serialized; reads share
// the lock.
class AnnotationService {
 public:
  AnnotationService(batching::Plan plan, ServiceConfig config);

  const batching::Plan& plan() const { return plan_; }

  // Registers a new worker and returns its bearer token.
  std::string IssueToken();
  std::optional<std::string> WorkerOf(const std::string& token) const;

  // The worker's unfinished batch if it has one, otherwise a newly claimed
  // batch; nullopt once nothing is admissible.
  std::optional<size_t> NextBatch(const std::string& worker_id);

  // Validates and durably appends; returns the byte offset in the log.
  uint64_t Submit(const annotation::AnnotationRecord& record);

  // Items of `batch_index` the worker has already annotated.
  std::set<std::string> DoneItems(const std::string& worker_id,
                                  size_t batch_index) const;

  Progress GetProgress() const;
  std::string ExportLog() const;
  std::vector<annotation::AnnotationRecord> Records() const;
  batching::LedgerState LedgerSnapshot() const;
  bool IsAdmin(const std::string& token) const;

 private:
  bool BatchDoneLocked(const std::string& worker_id, size_t batch_index) const;

  batching::Plan plan_;
  ServiceConfig config_;
  mutable std::shared_mutex mu_;
  std::unique_ptr<batching::AssignmentLedger> ledger_;
  std::unique_ptr<annotation::AnnotationValidator> validator_;
  std::unique_ptr<AppendLog> tokens_log_;
  std::unique_ptr<AppendLog> claims_log_;
  std::unique_ptr<AppendLog> annotations_log_;
  std::map<std::string, std::string> token_to_worker_;
  std::vector<annotation::AnnotationRecord> records_;
  std::map<std::string, int> item_counts_;
  std::set<std::pair<std::string, std::string>> done_;  // (worker, item)
};

// Segment rendering for annotators: exchanges up to k, speakers anonymized.
nlohmann::json RenderBatch(const batching::Plan& plan, size_t batch_index,
                           const std::set<std::string>& done_items);

// HTTP front end. Workers authenticate with "Authorization: Bearer <token>";
// a request to /api/batch/next without one is issued a fresh token.
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Blocks until Stop().
  bool Listen(const std::string& host, int port);
  // Binds to an ephemeral port, serves on a background thread, returns the port.
  int Start(const std::string& host = "127.0.0.1");
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace stb::service

#endif  // STB_SERVICE_H_
