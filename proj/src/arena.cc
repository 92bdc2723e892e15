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

#include "stb/arena.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "httplib.h"
#include "stb/error.h"

namespace stb::arena {
namespace {

// Annotators see item ids, so conversation ids must not name the systems.
std::string ConversationId(const std::string& a, const std::string& b,
                           uint64_t seed, size_t index) {
  const uint64_t h = HashString(a + '\0' + b);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "conv-%016llx",
                static_cast<unsigned long long>(
                    DeriveSeed(h, DeriveSeed(seed, index))));
  return buf;
}

using nlohmann::json;

class EchoBot : public Bot {
 public:
  std::string Respond(std::span<const HistoryEntry> history,
                      Rng&) const override {
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      if (it->speaker == Speaker::kOther) return it->text;
    }
    throw Error(ErrorKind::kTransport, "echo bot has nothing to echo");
  }
};

class CannedBot : public Bot {
 public:
  explicit CannedBot(std::vector<std::string> replies)
      : replies_(std::move(replies)) {
    if (replies_.empty()) {
      throw Error(ErrorKind::kPrecondition, "canned bot needs replies");
    }
  }

  std::string Respond(std::span<const HistoryEntry> history,
                      Rng&) const override {
    const auto own = std::count_if(
        history.begin(), history.end(),
        [](const HistoryEntry& e) { return e.speaker == Speaker::kSelf; });
    return replies_[static_cast<size_t>(own) % replies_.size()];
  }

 private:
  std::vector<std::string> replies_;
};

class UnigramBot : public Bot {
 public:
  UnigramBot(const corpus::Corpus* seed_corpus, int min_words, int max_words)
      : min_words_(std::max(1, min_words)),
        max_words_(std::max(min_words_, max_words)) {
    std::map<std::string, uint64_t> counts;
    if (seed_corpus != nullptr) {
      for (const auto& c : seed_corpus->conversations) {
        for (const auto& ex : c.exchanges) {
          for (const auto& t : ex.turns) {
            std::istringstream words(t.text);
            std::string w;
            while (words >> w) ++counts[w];
          }
        }
      }
    }
    if (counts.empty()) counts["hello"] = 1;
    uint64_t total = 0;
    for (auto& [word, n] : counts) {
      total += n;
      words_.push_back(word);
      cumulative_.push_back(total);
    }
  }

  std::string Respond(std::span<const HistoryEntry>,
                      Rng& rng) const override {
    const int span = max_words_ - min_words_ + 1;
    const int n = min_words_ + static_cast<int>(UniformIndex(rng, span));
    std::string out;
    for (int i = 0; i < n; ++i) {
      const uint64_t r = UniformIndex(rng, cumulative_.back());
      const auto it =
          std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
      if (!out.empty()) out += ' ';
      out += words_[static_cast<size_t>(it - cumulative_.begin())];
    }
    return out;
  }

 private:
  int min_words_;
  int max_words_;
  std::vector<std::string> words_;
  std::vector<uint64_t> cumulative_;
};

class HttpBot : public Bot {
 public:
  explicit HttpBot(HttpTransport transport) : transport_(std::move(transport)) {
    const std::string& url = transport_.url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorKind::kPrecondition, "bot url needs a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  std::string Respond(std::span<const HistoryEntry> history,
                      Rng&) const override {
    json turns = json::array();
    for (const auto& e : history) {
      turns.push_back(
          {{"speaker", e.speaker == Speaker::kSelf ? "self" : "other"},
           {"text", e.text}});
    }
    const json body = {{"history", std::move(turns)}};

    httplib::Client client(origin_);
    const auto seconds = static_cast<time_t>(transport_.timeout_seconds);
    const auto micros = static_cast<time_t>(
        (transport_.timeout_seconds - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) {
      throw Error(ErrorKind::kTransport,
                  transport_.url + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorKind::kTransport, transport_.url + ": HTTP status " +
                                             std::to_string(res->status));
    }
    std::string text;
    try {
      text = json::parse(res->body).at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kTransport,
                  transport_.url + ": malformed response: " + e.what());
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw Error(ErrorKind::kTransport, transport_.url + ": empty response");
    }
    return text;
  }

 private:
  HttpTransport transport_;
  std::string origin_;
  std::string path_;
};

std::vector<HistoryEntry> HistoryFor(
    int slot, const std::vector<corpus::Exchange>& exchanges,
    const std::string* pending_slot0) {
  std::vector<HistoryEntry> history;
  for (const auto& ex : exchanges) {
    for (const auto& t : ex.turns) {
      history.push_back(
          {t.slot == slot ? Speaker::kSelf : Speaker::kOther, t.text});
    }
  }
  if (pending_slot0 != nullptr) {
    history.push_back(
        {slot == 0 ? Speaker::kSelf : Speaker::kOther, *pending_slot0});
  }
  return history;
}

std::string RespondWithRetry(const Bot& bot,
                             std::span<const HistoryEntry> history, Rng& rng,
                             int max_retries) {
  for (int attempt = 0;; ++attempt) {
    try {
      return bot.Respond(history, rng);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kTransport || attempt >= max_retries) throw;
    }
  }
}

}  // namespace

std::unique_ptr<Bot> MakeBot(const BotEndpoint& endpoint,
                             const corpus::Corpus* seed_corpus) {
  if (const auto* http = std::get_if<HttpTransport>(&endpoint.transport)) {
    return std::make_unique<HttpBot>(*http);
  }
  const auto& builtin = std::get<BuiltinTransport>(endpoint.transport);
  if (builtin.name == "echo") return std::make_unique<EchoBot>();
  if (builtin.name == "canned") {
    return std::make_unique<CannedBot>(builtin.replies);
  }
  if (builtin.name == "unigram") {
    return std::make_unique<UnigramBot>(seed_corpus, builtin.min_words,
                                        builtin.max_words);
  }
  throw Error(ErrorKind::kPrecondition,
              "unknown builtin bot \"" + builtin.name + "\"");
}

std::string Respond(const BotEndpoint& endpoint,
                    std::span<const HistoryEntry> history, uint64_t rng_seed,
                    const corpus::Corpus* seed_corpus) {
  if (history.empty()) {
    throw Error(ErrorKind::kPrecondition, "history must not be empty");
  }
  Rng rng(rng_seed);
  return MakeBot(endpoint, seed_corpus)->Respond(history, rng);
}

PairSample SamplePair(const BotEndpoint& a, const BotEndpoint& b,
                      const SamplingConfig& config,
                      const corpus::Corpus& seed_corpus) {
  if (config.conversations_per_pair <= 0 || config.target_exchanges <= 0) {
    throw Error(ErrorKind::kPrecondition,
                "conversations_per_pair and target_exchanges must be positive");
  }
  if (config.target_exchanges < config.max_segment_length) {
    throw Error(ErrorKind::kPrecondition,
                "target_exchanges is below the largest segment length");
  }
  const size_t wanted = static_cast<size_t>(config.conversations_per_pair);
  if (seed_corpus.conversations.size() < wanted) {
    throw Error(ErrorKind::kPrecondition,
                "seed corpus has " +
                    std::to_string(seed_corpus.conversations.size()) +
                    " conversations, need " + std::to_string(wanted));
  }

  // Seeds are drawn uniformly without replacement.
  std::vector<size_t> order(seed_corpus.conversations.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng seed_rng = MakeRng(config.rng_seed, 0);
  Shuffle(order.begin(), order.end(), seed_rng);
  order.resize(wanted);

  const auto bot_a = MakeBot(a, &seed_corpus);
  const auto bot_b = MakeBot(b, &seed_corpus);

  PairSample out;
  for (size_t i = 0; i < wanted; ++i) {
    const corpus::Conversation& source = seed_corpus.conversations[order[i]];
    const corpus::Seed seed = corpus::ExtractSeed(source);
    Rng rng = MakeRng(config.rng_seed, 1 + i);

    corpus::Conversation c;
    c.id = ConversationId(a.system_name, b.system_name, config.rng_seed, i);
    c.domain = seed_corpus.domain;
    c.entities = {corpus::EntityDescriptor{corpus::EntityKind::kBot,
                                           a.system_name},
                  corpus::EntityDescriptor{corpus::EntityKind::kBot,
                                           b.system_name}};
    c.seed_source = seed.source_id;
    c.exchanges.push_back(seed.exchange);
    c.exchanges.back().index = 0;

    try {
      while (c.exchanges.size() < static_cast<size_t>(config.target_exchanges)) {
        const auto history_a = HistoryFor(0, c.exchanges, nullptr);
        std::string turn_a =
            RespondWithRetry(*bot_a, history_a, rng, config.max_retries);
        const auto history_b = HistoryFor(1, c.exchanges, &turn_a);
        std::string turn_b =
            RespondWithRetry(*bot_b, history_b, rng, config.max_retries);
        c.exchanges.push_back(corpus::Exchange{
            c.exchanges.size(),
            {corpus::Turn{0, std::move(turn_a)},
             corpus::Turn{1, std::move(turn_b)}}});
      }
    } catch (const Error& e) {
      out.failures.push_back({i, seed.source_id, e.what()});
      continue;
    }
    out.conversations.push_back(std::move(c));
  }
  return out;
}

std::vector<corpus::Conversation> SamplePairConversations(
    const BotEndpoint& a, const BotEndpoint& b, const SamplingConfig& config,
    const corpus::Corpus& seed_corpus) {
  PairSample sample = SamplePair(a, b, config, seed_corpus);
  if (!sample.failures.empty()) {
    std::string message = a.system_name + " vs " + b.system_name + ": " +
                          std::to_string(sample.conversations.size()) + " of " +
                          std::to_string(config.conversations_per_pair) +
                          " conversations succeeded";
    for (const auto& f : sample.failures) {
      message += "; conversation " + std::to_string(f.conversation_index) +
                 " (seed " + f.seed_source + "): " + f.message;
    }
    throw Error(ErrorKind::kPartialResult, message);
  }
  return std::move(sample.conversations);
}

corpus::Corpus SampleTournament(std::span<const BotEndpoint> bots,
                                const SamplingConfig& config,
                                const corpus::Corpus& seed_corpus) {
  std::unordered_set<std::string> names;
  for (const auto& bot : bots) {
    if (!names.insert(bot.system_name).second) {
      throw Error(ErrorKind::kPrecondition,
                  "duplicate bot system_name " + bot.system_name);
    }
  }
  corpus::Corpus out;
  out.domain = seed_corpus.domain;
  uint64_t pair_index = 0;
  for (size_t i = 0; i < bots.size(); ++i) {
    for (size_t j = i + 1; j < bots.size(); ++j) {
      SamplingConfig pair_config = config;
      pair_config.rng_seed = DeriveSeed(config.rng_seed, pair_index++);
      auto convs =
          SamplePairConversations(bots[i], bots[j], pair_config, seed_corpus);
      std::move(convs.begin(), convs.end(),
                std::back_inserter(out.conversations));
    }
  }
  return out;
}

std::vector<BotEndpoint> ParseBots(const json& j) {
  try {
    const json& list = j.is_array() ? j : j.at("bots");
    std::vector<BotEndpoint> bots;
    for (const json& item : list) {
      BotEndpoint bot;
      bot.system_name = item.at("system_name").get<std::string>();
      if (item.contains("http_url")) {
        HttpTransport http;
        http.url = item.at("http_url").get<std::string>();
        http.timeout_seconds = item.value("timeout_seconds", 30.0);
        bot.transport = http;
      } else {
        BuiltinTransport builtin;
        builtin.name = item.at("builtin").get<std::string>();
        builtin.replies =
            item.value("replies", std::vector<std::string>{});
        builtin.min_words = item.value("min_words", 3);
        builtin.max_words = item.value("max_words", 12);
        bot.transport = builtin;
      }
      bots.push_back(std::move(bot));
    }
    return bots;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("bots file: ") + e.what());
  }
}

std::vector<BotEndpoint> LoadBots(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  try {
    return ParseBots(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace stb::arena
