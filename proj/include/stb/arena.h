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

#ifndef STB_ARENA_H_
#define STB_ARENA_H_

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "stb/corpus.h"
#include "stb/rng.h"

// Drives two bots through seeded conversations.
namespace stb::arena {

enum class Speaker { kSelf, kOther };

struct HistoryEntry {
  Speaker speaker = Speaker::kOther;
  std::string text;
};

struct HttpTransport {
  std::string url;
  double timeout_seconds = 30.0;
};

// Toy bots that run in-process. "echo" repeats the partner's last utterance,
// "canned" cycles through `replies`, "unigram" samples words from the unigram
// distribution of the seed corpus.
struct BuiltinTransport {
  std::string name;
  std::vector<std::string> replies;
  int min_words = 3;
  int max_words = 12;
};

struct BotEndpoint {
  std::string system_name;
  std::variant<HttpTransport, BuiltinTransport> transport;
};

class Bot {
 public:
  virtual ~Bot() = default;
  // Returns a non-empty utterance or throws Error(kTransport).
  virtual std::string Respond(std::span<const HistoryEntry> history,
                              Rng& rng) const = 0;
};

// `seed_corpus` trains the unigram bot; other bots ignore it.
std::unique_ptr<Bot> MakeBot(const BotEndpoint& endpoint,
                             const corpus::Corpus* seed_corpus = nullptr);

// One-shot convenience wrapper around MakeBot(...)->Respond(...).
std::string Respond(const BotEndpoint& endpoint,
                    std::span<const HistoryEntry> history, uint64_t rng_seed,
                    const corpus::Corpus* seed_corpus = nullptr);

struct SamplingConfig {
  int conversations_per_pair = 45;
  int target_exchanges = 5;
  int max_segment_length = 0;
  uint64_t rng_seed = 0;
  int max_retries = 3;
};

struct SampleFailure {
  size_t conversation_index = 0;
  std::string seed_source;
  std::string message;
};

struct PairSample {
  std::vector<corpus::Conversation> conversations;
  std::vector<SampleFailure> failures;
};

// Samples one conversation per distinct seed; failures are collected rather
// than thrown.
PairSample SamplePair(const BotEndpoint& a, const BotEndpoint& b,
                      const SamplingConfig& config,
                      const corpus::Corpus& seed_corpus);

// As SamplePair but throws kPartialResult listing the failures when fewer than
// conversations_per_pair conversations were produced.
std::vector<corpus::Conversation> SamplePairConversations(
    const BotEndpoint& a, const BotEndpoint& b, const SamplingConfig& config,
    const corpus::Corpus& seed_corpus);

// All unordered pairs (i < j) in endpoint order; pair p samples with the seed
// DeriveSeed(config.rng_seed, p).
corpus::Corpus SampleTournament(std::span<const BotEndpoint> bots,
                                const SamplingConfig& config,
                                const corpus::Corpus& seed_corpus);

std::vector<BotEndpoint> ParseBots(const nlohmann::json& j);
std::vector<BotEndpoint> LoadBots(const std::filesystem::path& path);

}  // namespace stb::arena

#endif  // STB_ARENA_H_
