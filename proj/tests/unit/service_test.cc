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

#include <cstdlib>
#include <filesystem>
#include <thread>

#include "gtest/gtest.h"
#include "httplib.h"
#include "json.hpp"
#include "stb/arena.h"
#include "stb/error.h"
#include "synth.h"

namespace stb::service {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path TempStore() {
  std::string tmpl = (fs::temp_directory_path() / "stb_service_XXXXXX").string();
  const char* dir = mkdtemp(tmpl.data());
  if (dir == nullptr) throw std::runtime_error("mkdtemp failed");
  return dir;
}

// Blind-looking plan: bot names never appear in conversation ids or turns.
batching::Plan SampledPlan(std::vector<int> lengths, int per_pair, double mix, int batch_size) {
  const auto seeds = testing::HumanCorpus(per_pair + 10, 6, {});
  arena::SamplingConfig sampling;
  sampling.conversations_per_pair = per_pair;
  sampling.target_exchanges = 5;
  sampling.max_segment_length = 5;
  std::vector<arena::BotEndpoint> bots;
  for (const char* name : {"Alpha", "Beta", "Gamma"}) {
    bots.push_back({name, arena::BuiltinTransport{"canned", {"sure", "why not", "okay then"}}});
  }
  auto corpus = arena::SampleTournament(bots, sampling, seeds);
  corpus.segment_lengths = lengths;
  batching::PlanConfig config;
  config.batch_size = batch_size;
  config.human_mix = mix;
  config.rng_seed = 3;
  return batching::MakePlan(corpus, testing::HumanCorpus(40, 6, lengths), config);
}

json Annotation(const std::string& item) {
  return {{"item_id", item},
          {"labels", {"bot", "human"}},
          {"preferences", {{"fluency", "first"}, {"specificity", "tie"}, {"sensibleness", "second"}}},
          {"duration_seconds", 21.0},
          {"submitted_at", "2026-01-01T00:00:00Z"}};
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override { store_ = TempStore(); }
  void TearDown() override { fs::remove_all(store_); }

  void Boot(batching::Plan plan) {
    service_ = std::make_unique<AnnotationService>(std::move(plan), ServiceConfig{store_, "s3cret"});
    server_ = std::make_unique<HttpServer>(*service_);
    port_ = server_->Start();
  }
  void Shutdown() {
    server_.reset();
    service_.reset();
  }

  httplib::Client Client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }

  json Next(const std::string& token = "") const {
    auto c = Client();
    httplib::Headers h;
    if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
    const auto res = c.Get("/api/batch/next", h);
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 200) << res->body;
    return json::parse(res->body);
  }

  int Post(const std::string& token, const std::string& body) const {
    auto c = Client();
    httplib::Headers h;
    if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
    const auto res = c.Post("/api/annotation", h, body, "application/json");
    return res ? res->status : -1;
  }

  void Finish(const std::string& token, const json& batch) const {
    for (const auto& item : batch.at("items")) {
      if (!item.at("done").get<bool>()) {
        EXPECT_EQ(Post(token, Annotation(item.at("item_id")).dump()), 200);
      }
    }
  }

  fs::path store_;
  std::unique_ptr<AnnotationService> service_;
  std::unique_ptr<HttpServer> server_;
  int port_ = 0;
};

TEST_F(ServiceTest, ClaimRenderAndSubmit) {
  Boot(SampledPlan({2, 3, 5}, 10, 0.2, 20));
  const json first = Next();
  const std::string token = first.at("token");
  ASSERT_FALSE(first.at("batch").is_null());
  const json& batch = first.at("batch");
  ASSERT_FALSE(batch.at("items").empty());
  const std::string dump = batch.dump();
  for (const char* name : {"Alpha", "Beta", "Gamma"}) {
    EXPECT_EQ(dump.find(name), std::string::npos) << name;
  }
  for (const auto& item : batch.at("items")) {
    EXPECT_EQ(item.at("item_id").get<std::string>().rfind("item-", 0), 0u);
    EXPECT_EQ(item.at("exchanges").size(), item.at("k").get<size_t>());
    for (const auto& e : item.at("exchanges")) {
      ASSERT_EQ(e.at("turns").size(), 2u);
      EXPECT_EQ(e.at("turns")[0].at("speaker"), "Speaker A");
      EXPECT_EQ(e.at("turns")[1].at("speaker"), "Speaker B");
    }
  }
  // Asking again returns the same unfinished batch.
  EXPECT_EQ(Next(token).at("batch").at("batch_id"), batch.at("batch_id"));

  const std::string item = batch.at("items")[0].at("item_id");
  auto c = Client();
  const auto ok = c.Post("/api/annotation", {{"Authorization", "Bearer " + token}},
                         Annotation(item).dump(), "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(json::parse(ok->body).at("status"), "accepted");
  EXPECT_EQ(json::parse(ok->body).at("offset"), 0);
  const std::string log = service_->ExportLog();

  EXPECT_EQ(Post(token, Annotation(item).dump()), 409);
  EXPECT_EQ(service_->ExportLog(), log);
  std::string other;
  for (const auto& b : service_->plan().batches()) {
    if (b.batch_id != batch.at("batch_id")) other = b.items[0].item_id;
  }
  EXPECT_EQ(Post(token, Annotation(other).dump()), 403);
  EXPECT_EQ(Post("", Annotation(item).dump()), 401);
  EXPECT_EQ(Post("bogus", Annotation(item).dump()), 401);
  EXPECT_EQ(Post(token, "{nope"), 400);
  json missing = Annotation(batch.at("items")[1].at("item_id"));
  missing["preferences"].erase("specificity");
  EXPECT_EQ(Post(token, missing.dump()), 400);
  // Identity comes from the token even if the payload claims otherwise.
  json spoof = Annotation(batch.at("items")[2].at("item_id"));
  spoof["worker_id"] = "w999";
  EXPECT_EQ(Post(token, spoof.dump()), 200);
  EXPECT_EQ(service_->Records().back().worker_id, first.at("worker_id"));

  // The new record is marked done in the next render.
  const json again = Next(token).at("batch");
  int done = 0;
  for (const auto& i : again.at("items")) done += i.at("done").get<bool>();
  EXPECT_EQ(done, 2);
}

TEST_F(ServiceTest, UnknownTokenIsRejected) {
  Boot(SampledPlan({2}, 10, 0.0, 10));
  auto c = Client();
  const auto res = c.Get("/api/batch/next", {{"Authorization", "Bearer nope"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 401);
}

TEST_F(ServiceTest, WorkerStopsAfterThreeBatches) {
  Boot(SampledPlan({2}, 20, 0.0, 10));
  ASSERT_GE(service_->plan().batches().size(), 4u);
  json r = Next();
  const std::string token = r.at("token");
  std::set<std::string> seen;
  for (int i = 0; i < 3; ++i) {
    ASSERT_FALSE(r.at("batch").is_null()) << i;
    EXPECT_TRUE(seen.insert(r.at("batch").at("batch_id")).second);
    Finish(token, r.at("batch"));
    r = Next(token);
  }
  EXPECT_TRUE(r.at("batch").is_null());
}

TEST_F(ServiceTest, ProgressCounts) {
  Boot(SampledPlan({2}, 10, 0.0, 10));
  const size_t items = service_->plan().item_count();
  auto c = Client();
  auto progress = [&] {
    const auto res = c.Get("/api/progress");
    EXPECT_EQ(res->status, 200);
    return json::parse(res->body);
  };
  json p = progress();
  EXPECT_EQ(p.at("total").at("pending"), items);
  EXPECT_EQ(p.at("total").at("full"), 0);

  const json a = Next();
  const std::string item = a.at("batch").at("items")[0].at("item_id");
  ASSERT_EQ(Post(a.at("token"), Annotation(item).dump()), 200);
  p = progress();
  EXPECT_EQ(p.at("total").at("partial"), 1);
  EXPECT_EQ(p.at("total").at("pending"), items - 1);

  // Fresh workers fill the least-served batch first.
  json b = Next();
  for (int i = 0; i < 5 && b.at("batch").at("batch_id") != a.at("batch").at("batch_id"); ++i) {
    b = Next();
  }
  ASSERT_EQ(b.at("batch").at("batch_id"), a.at("batch").at("batch_id"));
  ASSERT_EQ(Post(b.at("token"), Annotation(item).dump()), 200);
  p = progress();
  EXPECT_EQ(p.at("total").at("full"), 1);
  EXPECT_EQ(p.at("total").at("partial"), 0);
  EXPECT_EQ(p.at("by_length").size(), 1u);
  EXPECT_EQ(p.at("by_pair").size(), 3u);
  EXPECT_EQ(p.at("annotations"), 2);
}

TEST_F(ServiceTest, ExportNeedsAdmin) {
  Boot(SampledPlan({2}, 10, 0.0, 10));
  const json a = Next();
  ASSERT_EQ(Post(a.at("token"), Annotation(a.at("batch").at("items")[0].at("item_id")).dump()), 200);
  auto c = Client();
  EXPECT_EQ(c.Get("/api/export")->status, 403);
  EXPECT_EQ(c.Get("/api/export", {{"Authorization", "Bearer " + a.at("token").get<std::string>()}})
                ->status,
            403);
  const auto res = c.Get("/api/export", {{"Authorization", "Bearer s3cret"}});
  ASSERT_EQ(res->status, 200);
  const auto parsed = annotation::ParseAnnotations(res->body, service_->plan(), nullptr);
  EXPECT_EQ(parsed.records, service_->Records());
}

TEST_F(ServiceTest, RestartReplaysStore) {
  const auto plan = SampledPlan({2, 3}, 10, 0.2, 20);
  Boot(plan);
  const json a = Next();
  const std::string token = a.at("token");
  const std::string item = a.at("batch").at("items")[0].at("item_id");
  ASSERT_EQ(Post(token, Annotation(item).dump()), 200);
  ASSERT_EQ(Post(token, Annotation(a.at("batch").at("items")[1].at("item_id")).dump()), 200);
  const auto records = service_->Records();
  const auto ledger = service_->LedgerSnapshot();
  Shutdown();

  Boot(plan);
  EXPECT_EQ(service_->Records(), records);
  EXPECT_EQ(service_->LedgerSnapshot(), ledger);
  EXPECT_EQ(service_->WorkerOf(token), a.at("worker_id").get<std::string>());
  EXPECT_EQ(Post(token, Annotation(item).dump()), 409);
  EXPECT_EQ(Next(token).at("batch").at("batch_id"), a.at("batch").at("batch_id"));
  // New workers do not reuse replayed ids.
  EXPECT_NE(Next().at("worker_id"), a.at("worker_id"));
}

TEST_F(ServiceTest, ConcurrentRobotsKeepPlanValid) {
  Boot(SampledPlan({2, 3, 5}, 10, 0.2, 20));
  std::atomic<bool> exhausted{false};
  std::vector<std::thread> robots;
  for (int t = 0; t < 6; ++t) {
    robots.emplace_back([&] {
      while (!exhausted) {
        json r = Next();
        if (r.at("batch").is_null()) {
          exhausted = true;
          break;
        }
        const std::string token = r.at("token");
        while (!r.at("batch").is_null()) {
          Finish(token, r.at("batch"));
          r = Next(token);
        }
      }
    });
  }
  for (auto& r : robots) r.join();
  const auto& plan = service_->plan();
  const auto report = batching::ValidatePlan(plan.batches(), service_->LedgerSnapshot(), plan.config());
  for (const auto& v : report.violations) ADD_FAILURE() << v.message;
  EXPECT_EQ(service_->Records().size(), 2 * plan.item_count());
  const auto p = service_->GetProgress();
  EXPECT_EQ(p.total.full, static_cast<int>(plan.item_count()));
  // Every stored record validates against the final ledger.
  batching::AssignmentLedger ledger(plan);
  for (const auto& [worker, batches] : service_->LedgerSnapshot().worker_batches) {
    for (const auto& id : batches) {
      for (size_t b = 0; b < plan.batches().size(); ++b) {
        if (plan.batches()[b].batch_id == id) ASSERT_EQ(ledger.Claim(worker, b), "");
      }
    }
  }
  const auto reimport = annotation::ParseAnnotations(service_->ExportLog(), plan, &ledger);
  EXPECT_TRUE(reimport.rejected.empty());
}

TEST(AppendLogTest, TornTailIsDropped) {
  const fs::path dir = TempStore();
  const fs::path path = dir / "log.jsonl";
  {
    AppendLog log(path);
    EXPECT_EQ(log.Append(R"({"a":1})"), 0u);
    EXPECT_EQ(log.Append(R"({"a":2})"), 8u);
  }
  {
    std::FILE* f = std::fopen(path.c_str(), "ab");
    std::fputs(R"({"a":3)", f);
    std::fclose(f);
  }
  AppendLog log(path);
  EXPECT_EQ(log.ReadLines(), (std::vector<std::string>{R"({"a":1})", R"({"a":2})"}));
  EXPECT_EQ(log.Append(R"({"a":4})"), 16u);
  EXPECT_EQ(log.ReadLines().back(), R"({"a":4})");
  EXPECT_EQ(log.size(), 24u);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace stb::service
