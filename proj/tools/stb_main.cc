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

// stb: command-line entry point for sampling, planning, serving and analysis.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stb/analyses.h"
#include "stb/annotation.h"
#include "stb/arena.h"
#include "stb/batching.h"
#include "stb/corpus.h"
#include "stb/error.h"
#include "stb/ranking.h"
#include "stb/report.h"
#include "stb/rng.h"
#include "stb/service.h"
#include "stb/survival.h"

namespace {

using nlohmann::json;

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw stb::Error(stb::ErrorKind::kStorage, "cannot write " + path);
  out << text;
}

std::vector<int> ParseLengths(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stoi(part));
  stb::corpus::CheckSegmentLengths(out);
  return out;
}

// Annotation inputs shared by the analysis commands.
struct AnnotationInputs {
  std::string annotations;
  std::string plan;
  std::string ledger;
  std::optional<double> filter_below;

  void Register(CLI::App* cmd, bool with_filter) {
    cmd->add_option("--annotations", annotations, "annotation log (jsonl)")->required();
    cmd->add_option("--plan", plan, "plan.json")->required();
    cmd->add_option("--ledger", ledger,
                    "claims log; when given, unassigned submissions are rejected");
    if (with_filter) {
      cmd->add_option("--filter-below", filter_below,
                      "drop annotators whose correctness is below this");
    }
  }
};

struct Loaded {
  stb::batching::Plan plan;
  std::vector<stb::annotation::Judgment> judgments;
};

std::unique_ptr<Loaded> Load(const AnnotationInputs& in) {
  auto loaded = std::make_unique<Loaded>();
  loaded->plan = stb::batching::LoadPlan(in.plan);
  std::unique_ptr<stb::batching::AssignmentLedger> ledger;
  if (!in.ledger.empty()) {
    ledger = std::make_unique<stb::batching::AssignmentLedger>(loaded->plan);
    std::ifstream claims(in.ledger);
    if (!claims) throw stb::Error(stb::ErrorKind::kNotFound, "cannot open " + in.ledger);
    std::map<std::string, size_t> index;
    for (size_t b = 0; b < loaded->plan.batches().size(); ++b) {
      index[loaded->plan.batches()[b].batch_id] = b;
    }
    std::string line;
    while (std::getline(claims, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const auto it = index.find(j.at("batch_id").get<std::string>());
      if (it == index.end()) continue;
      const std::string refused = ledger->Claim(j.at("worker_id").get<std::string>(), it->second);
      if (!refused.empty()) std::cerr << "ledger: ignored claim: " << refused << "\n";
    }
  }
  const auto imported =
      stb::annotation::ImportAnnotations(in.annotations, loaded->plan, ledger.get());
  for (const auto& r : imported.rejected) {
    std::cerr << in.annotations << ":" << r.line << ": rejected: " << r.reason << "\n";
  }
  auto judgments = stb::annotation::Resolve(imported.records, loaded->plan);
  if (in.filter_below) {
    const auto scores = stb::analyses::ScoreAnnotators(judgments, *in.filter_below);
    std::cerr << "filtered " << scores.filtered.size() << " annotator(s) below "
              << *in.filter_below << "\n";
    judgments = stb::analyses::RetainedOnly(judgments, scores);
  }
  loaded->judgments = std::move(judgments);
  return loaded;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bot-vs-bot tournament evaluation"};
  app.require_subcommand(1);

  // sample
  std::string bots_path, seeds_path, sample_out, lengths_arg = "2,3,5";
  int per_pair = 45;
  int exchanges = 5;
  uint64_t seed = 0;
  auto* sample = app.add_subcommand("sample", "run bot-vs-bot conversations");
  sample->add_option("--bots", bots_path, "bots.json")->required();
  sample->add_option("--seeds", seeds_path, "human conversations supplying seed exchanges")
      ->required();
  sample->add_option("--per-pair", per_pair, "conversations per pair");
  sample->add_option("--exchanges", exchanges, "exchanges per conversation");
  sample->add_option("--lengths", lengths_arg, "segment lengths, comma separated");
  sample->add_option("--seed", seed, "rng seed");
  sample->add_option("--out", sample_out, "output conversations (jsonl)")->required();

  // overlap
  std::string sampled_path, training_path;
  auto* overlap = app.add_subcommand("overlap", "share of sampled conversations copying training exchanges");
  overlap->add_option("--sampled", sampled_path)->required();
  overlap->add_option("--training", training_path)->required();

  // plan
  std::string conversations_path, humans_path, plan_out;
  stb::batching::PlanConfig plan_config;
  auto* plan = app.add_subcommand("plan", "segment conversations into annotation batches");
  plan->add_option("--conversations", conversations_path, "bot-bot conversations")->required();
  plan->add_option("--humans", humans_path, "human-human conversations to mix in");
  plan->add_option("--lengths", lengths_arg, "segment lengths, comma separated");
  plan->add_option("--batch-size", plan_config.batch_size);
  plan->add_option("--annotators", plan_config.annotators_per_item);
  plan->add_option("--max-batches", plan_config.max_batches);
  plan->add_option("--human-mix", plan_config.human_mix);
  plan->add_option("--seed", seed);
  plan->add_option("--out", plan_out)->required();

  // rank
  AnnotationInputs rank_in;
  int bootstrap = 1000;
  std::string rank_out;
  auto* rank = app.add_subcommand("rank", "win rates, chi-square and bootstrap rank ranges");
  rank_in.Register(rank, true);
  rank->add_option("--bootstrap", bootstrap, "bootstrap replicates");
  rank->add_option("--seed", seed);
  rank->add_option("--out", rank_out, "ranking.json");

  // survival
  AnnotationInputs surv_in;
  int permutations = 2000;
  std::string surv_out, csv_out;
  auto* surv = app.add_subcommand("survival", "survival curves, log-rank tests and Cox fits");
  surv_in.Register(surv, true);
  surv->add_option("--permutations", permutations);
  surv->add_option("--seed", seed);
  surv->add_option("--out", surv_out, "survival.json");
  surv->add_option("--csv", csv_out, "curve points (csv)");

  // stability
  AnnotationInputs stab_in;
  std::string n_range = "3:45";
  int reps = 1000;
  bool loo = false;
  std::string stab_out;
  auto* stab = app.add_subcommand("stability", "ranking stability under conversation subsampling");
  stab_in.Register(stab, true);
  stab->add_option("--n", n_range, "min:max conversations per pair");
  stab->add_option("--reps", reps);
  stab->add_option("--seed", seed);
  stab->add_flag("--leave-one-out", loo, "also drop each system in turn");
  stab->add_option("--out", stab_out, "stability.csv");

  // agreement
  AnnotationInputs agree_in;
  std::string agree_out;
  auto* agree = app.add_subcommand("agreement", "per-system label agreement");
  agree_in.Register(agree, true);
  agree->add_option("--out", agree_out);

  // annotators
  AnnotationInputs ann_in;
  double threshold = 0.75;
  std::string ann_out;
  auto* ann = app.add_subcommand("annotators", "annotator correctness");
  ann_in.Register(ann, false);
  ann->add_option("--filter-below", threshold);
  ann->add_option("--out", ann_out);

  // report
  AnnotationInputs rep_in;
  int stability_reps = 0;
  std::string out_dir;
  auto* rep = app.add_subcommand("report", "all tables as JSON, Markdown and CSV");
  rep_in.Register(rep, false);
  rep->add_option("--filter-below", rep_in.filter_below);
  rep->add_option("--bootstrap", bootstrap);
  rep->add_option("--permutations", permutations);
  rep->add_option("--stability-reps", stability_reps, "0 skips stability");
  rep->add_option("--lengths", lengths_arg);
  rep->add_option("--seed", seed);
  rep->add_option("--out-dir", out_dir)->required();

  // serve
  std::string serve_plan, store = "./data", host = "0.0.0.0", admin_token;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "annotation HTTP service");
  serve->add_option("--plan", serve_plan)->required();
  serve->add_option("--store", store);
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--admin-token", admin_token, "enables /api/export")
      ->envname("STB_ADMIN_TOKEN");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) {
      const auto bots = stb::arena::LoadBots(bots_path);
      const auto seeds = stb::corpus::LoadCorpus(seeds_path, {});
      const auto lengths = ParseLengths(lengths_arg);
      stb::arena::SamplingConfig config;
      config.conversations_per_pair = per_pair;
      config.target_exchanges = exchanges;
      config.max_segment_length = lengths.back();
      config.rng_seed = seed;
      auto corpus = stb::arena::SampleTournament(bots, config, seeds);
      corpus.segment_lengths = lengths;
      stb::corpus::SaveCorpus(corpus, sample_out);
      std::cerr << "wrote " << corpus.conversations.size() << " conversations\n";
    } else if (*overlap) {
      const auto sampled = stb::corpus::LoadCorpus(sampled_path, {});
      const auto training = stb::corpus::LoadCorpus(training_path, {});
      std::printf("%.4f\n", stb::corpus::TrainingOverlapRate(sampled, training));
    } else if (*plan) {
      plan_config.segment_lengths = ParseLengths(lengths_arg);
      plan_config.rng_seed = seed;
      const auto bots = stb::corpus::LoadCorpus(conversations_path, plan_config.segment_lengths);
      stb::corpus::Corpus humans;
      humans.domain = bots.domain;
      humans.segment_lengths = plan_config.segment_lengths;
      if (!humans_path.empty()) {
        humans = stb::corpus::LoadCorpus(humans_path, plan_config.segment_lengths);
      } else {
        plan_config.human_mix = 0.0;
      }
      const auto p = stb::batching::MakePlan(bots, humans, plan_config);
      stb::batching::SavePlan(p, plan_out);
      std::cerr << "wrote " << p.batches().size() << " batches, " << p.item_count()
                << " items\n";
    } else if (*rank) {
      const auto loaded = Load(rank_in);
      const auto matches = stb::ranking::MatchesFrom(loaded->judgments);
      stb::ranking::BootstrapConfig config;
      config.replicates = bootstrap;
      config.rng_seed = seed;
      const auto report = stb::ranking::BootstrapRanking(matches, config);
      std::cout << stb::ranking::FormatTable(report);
      if (!rank_out.empty()) WriteText(rank_out, stb::ranking::ToJson(report).dump(2) + "\n");
    } else if (*surv) {
      const auto loaded = Load(surv_in);
      stb::survival::SurvivalConfig config;
      config.permutations = permutations;
      config.rng_seed = seed;
      const auto report = stb::survival::AnalyzeSurvival(loaded->judgments, config);
      const std::string text = stb::survival::ToJson(report).dump(2) + "\n";
      WriteText(surv_out, text);
      if (!csv_out.empty()) WriteText(csv_out, stb::survival::CurveCsv(report));
    } else if (*stab) {
      const auto loaded = Load(stab_in);
      const auto matches = stb::ranking::MatchesFrom(loaded->judgments);
      stb::analyses::StabilityConfig config;
      const auto colon = n_range.find(':');
      config.n_min = std::stoi(n_range.substr(0, colon));
      config.n_max = colon == std::string::npos ? config.n_min : std::stoi(n_range.substr(colon + 1));
      config.repetitions = reps;
      config.rng_seed = seed;
      const auto curve = stb::analyses::ComputeStability(matches, config);
      WriteText(stab_out, stb::analyses::StabilityCsv(curve));
      const auto n = stb::analyses::MinStableN(curve);
      std::cerr << "min stable n: " << (n ? std::to_string(*n) : "not reached") << "\n";
      if (loo) {
        for (const auto& [name, c] : stb::analyses::LeaveOneOut(matches, config)) {
          const auto m = stb::analyses::MinStableN(c);
          std::cerr << "without " << name << ": "
                    << (m ? std::to_string(*m) : "not reached") << "\n";
        }
      }
    } else if (*agree) {
      const auto loaded = Load(agree_in);
      const auto table = stb::analyses::ComputeAgreement(loaded->judgments);
      WriteText(agree_out, stb::analyses::ToJson(table).dump(2) + "\n");
    } else if (*ann) {
      const auto loaded = Load(ann_in);
      const auto scores = stb::analyses::ScoreAnnotators(loaded->judgments, threshold);
      WriteText(ann_out, stb::analyses::ToJson(scores).dump(2) + "\n");
    } else if (*rep) {
      const auto loaded = Load(AnnotationInputs{rep_in.annotations, rep_in.plan, rep_in.ledger, {}});
      stb::report::ReportConfig config;
      config.bootstrap = bootstrap;
      config.permutations = permutations;
      config.rng_seed = seed;
      config.stability_repetitions = stability_reps;
      config.filter_below = rep_in.filter_below;
      config.segment_lengths = loaded->plan.config().segment_lengths;
      const auto report = stb::report::BuildReport(loaded->judgments, config);
      stb::report::WriteReport(report, out_dir);
      std::cerr << "wrote report to " << out_dir << "\n";
    } else if (*serve) {
      stb::service::AnnotationService service(stb::batching::LoadPlan(serve_plan),
                                              {store, admin_token});
      stb::service::HttpServer server(service);
      std::cerr << "serving on " << host << ":" << port << "\n";
      if (!server.Listen(host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
    }
  } catch (const stb::Error& e) {
    std::cerr << "stb: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stb: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
