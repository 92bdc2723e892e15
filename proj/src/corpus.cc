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

#include "stb/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "stb/error.h"

namespace stb::corpus {
namespace {

using nlohmann::json;

std::string Trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Key of an exchange for overlap matching: both normalized turns.
std::string ExchangeKey(const Exchange& exchange) {
  return NormalizeText(exchange.turns[0].text) + '\x1f' +
         NormalizeText(exchange.turns[1].text);
}

}  // namespace

std::string_view EntityKindName(EntityKind kind) {
  return kind == EntityKind::kBot ? "bot" : "human";
}

EntityKind ParseEntityKind(std::string_view name) {
  if (name == "bot") return EntityKind::kBot;
  if (name == "human") return EntityKind::kHuman;
  throw Error(ErrorKind::kParse,
              "entity kind must be \"bot\" or \"human\", got \"" +
                  std::string(name) + "\"");
}

const Conversation* Corpus::Find(std::string_view id) const {
  for (const auto& c : conversations) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

Conversation MakeConversation(
    std::string id, std::string domain,
    std::array<EntityDescriptor, 2> entities,
    const std::vector<std::array<std::string, 2>>& exchanges,
    std::optional<std::string> seed_source) {
  Conversation c;
  c.id = std::move(id);
  c.domain = std::move(domain);
  c.entities = std::move(entities);
  c.seed_source = std::move(seed_source);
  c.exchanges.reserve(exchanges.size());
  for (size_t i = 0; i < exchanges.size(); ++i) {
    c.exchanges.push_back(
        Exchange{i, {Turn{0, exchanges[i][0]}, Turn{1, exchanges[i][1]}}});
  }
  return c;
}

std::string CheckConversation(const Conversation& c, size_t min_length) {
  if (c.id.empty()) return "conversation id is empty";
  const auto& [e0, e1] = c.entities;
  if (e0.kind != e1.kind) {
    return "conversation " + c.id +
           " mixes a bot and a human; only bot-bot and human-human are allowed";
  }
  for (const auto& e : c.entities) {
    if (e.system_name.empty()) {
      return "conversation " + c.id + " has an entity without system_name";
    }
    if (e.kind == EntityKind::kHuman && e.system_name != kHumanSystem) {
      return "conversation " + c.id + " has a human entity named \"" +
             e.system_name + "\"";
    }
  }
  for (size_t i = 0; i < c.exchanges.size(); ++i) {
    const Exchange& ex = c.exchanges[i];
    if (ex.index != i) {
      return "conversation " + c.id + " has non-contiguous exchange indices";
    }
    for (int slot = 0; slot < 2; ++slot) {
      const Turn& t = ex.turns[slot];
      if (t.slot != slot) {
        return "conversation " + c.id + " has a turn in the wrong slot";
      }
      if (Trim(t.text).empty()) {
        return "conversation " + c.id + " has an empty turn in exchange " +
               std::to_string(i);
      }
      if (t.text.size() > kMaxTurnChars) {
        return "conversation " + c.id + " has a turn longer than " +
               std::to_string(kMaxTurnChars) + " characters in exchange " +
               std::to_string(i);
      }
    }
  }
  if (c.exchanges.size() < min_length) {
    return "conversation " + c.id + " has " +
           std::to_string(c.exchanges.size()) +
           " exchanges, fewer than the largest segment length " +
           std::to_string(min_length);
  }
  return {};
}

void CheckSegmentLengths(const std::vector<int>& segment_lengths) {
  for (size_t i = 0; i < segment_lengths.size(); ++i) {
    if (segment_lengths[i] <= 0) {
      throw Error(ErrorKind::kInvariant, "segment lengths must be positive");
    }
    if (i > 0 && segment_lengths[i] <= segment_lengths[i - 1]) {
      throw Error(ErrorKind::kInvariant,
                  "segment lengths must be strictly ascending");
    }
  }
}

json ToJson(const Conversation& c) {
  json entities = json::array();
  for (const auto& e : c.entities) {
    entities.push_back(
        {{"kind", EntityKindName(e.kind)}, {"system_name", e.system_name}});
  }
  json exchanges = json::array();
  for (const auto& ex : c.exchanges) {
    exchanges.push_back(json::array({ex.turns[0].text, ex.turns[1].text}));
  }
  json j = {{"id", c.id},
            {"domain", c.domain},
            {"entities", std::move(entities)},
            {"exchanges", std::move(exchanges)}};
  if (c.seed_source) j["seed_source"] = *c.seed_source;
  return j;
}

Conversation ConversationFromJson(const json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorKind::kParse, "expected an object");
    Conversation c;
    c.id = j.at("id").get<std::string>();
    c.domain = j.at("domain").get<std::string>();
    const json& entities = j.at("entities");
    if (!entities.is_array() || entities.size() != 2) {
      throw Error(ErrorKind::kParse, "entities must be an array of 2 objects");
    }
    for (int slot = 0; slot < 2; ++slot) {
      c.entities[slot].kind =
          ParseEntityKind(entities[slot].at("kind").get<std::string>());
      c.entities[slot].system_name =
          entities[slot].at("system_name").get<std::string>();
    }
    const json& exchanges = j.at("exchanges");
    if (!exchanges.is_array()) {
      throw Error(ErrorKind::kParse, "exchanges must be an array");
    }
    for (size_t i = 0; i < exchanges.size(); ++i) {
      const json& pair = exchanges[i];
      if (!pair.is_array() || pair.size() != 2) {
        throw Error(ErrorKind::kParse, "exchange " + std::to_string(i) +
                                           " must be an array of 2 strings");
      }
      c.exchanges.push_back(Exchange{i,
                                     {Turn{0, pair[0].get<std::string>()},
                                      Turn{1, pair[1].get<std::string>()}}});
    }
    if (j.contains("seed_source") && !j["seed_source"].is_null()) {
      c.seed_source = j["seed_source"].get<std::string>();
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, e.what());
  }
}

Corpus ParseCorpus(std::string_view text, std::vector<int> segment_lengths) {
  CheckSegmentLengths(segment_lengths);
  Corpus corpus;
  corpus.segment_lengths = std::move(segment_lengths);
  const size_t min_length =
      static_cast<size_t>(corpus.max_segment_length());

  std::vector<std::string> parse_errors;
  std::vector<std::string> violations;
  std::unordered_set<std::string> ids;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Trim(line).empty()) continue;

    Conversation c;
    try {
      c = ConversationFromJson(json::parse(line));
    } catch (const json::exception& e) {
      parse_errors.push_back("line " + std::to_string(line_no) + ": " +
                             e.what());
      continue;
    } catch (const Error& e) {
      parse_errors.push_back("line " + std::to_string(line_no) + ": " +
                             e.what());
      continue;
    }
    std::string problem = CheckConversation(c, min_length);
    if (problem.empty() && !ids.insert(c.id).second) {
      problem = "duplicate conversation id " + c.id;
    }
    if (problem.empty() && !corpus.conversations.empty() &&
        c.domain != corpus.domain) {
      problem = "conversation " + c.id + " is in domain \"" + c.domain +
                "\" but the corpus is \"" + corpus.domain + "\"";
    }
    if (!problem.empty()) {
      violations.push_back("line " + std::to_string(line_no) + ": " + problem);
      continue;
    }
    if (corpus.conversations.empty()) corpus.domain = c.domain;
    corpus.conversations.push_back(std::move(c));
  }

  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
    return out;
  };
  if (!parse_errors.empty()) {
    throw Error(ErrorKind::kParse, join(parse_errors));
  }
  if (!violations.empty()) {
    throw Error(ErrorKind::kInvariant, join(violations));
  }
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path& path,
                  std::vector<int> segment_lengths) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseCorpus(buffer.str(), std::move(segment_lengths));
}

std::string SerializeCorpus(const Corpus& corpus) {
  std::string out;
  for (const auto& c : corpus.conversations) {
    out += ToJson(c).dump();
    out += '\n';
  }
  return out;
}

void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kStorage, "cannot write " + path.string());
  out << SerializeCorpus(corpus);
  if (!out) throw Error(ErrorKind::kStorage, "write failed: " + path.string());
}

Segment MakeSegment(const Conversation& conversation, int k) {
  if (k <= 0 || static_cast<size_t>(k) > conversation.length()) {
    throw Error(ErrorKind::kPrecondition,
                "segment length " + std::to_string(k) +
                    " exceeds conversation " + conversation.id + " of " +
                    std::to_string(conversation.length()) + " exchanges");
  }
  Segment segment{conversation, k};
  segment.conversation.exchanges.resize(static_cast<size_t>(k));
  return segment;
}

Seed ExtractSeed(const Conversation& human_conversation) {
  if (human_conversation.exchanges.empty()) {
    throw Error(ErrorKind::kPrecondition,
                "conversation " + human_conversation.id + " has no exchanges");
  }
  return Seed{human_conversation.id, human_conversation.exchanges.front()};
}

std::string NormalizeText(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

double TrainingOverlapRate(const Corpus& sampled, const Corpus& training) {
  if (sampled.conversations.empty()) {
    throw Error(ErrorKind::kUndefinedRate,
                "overlap rate of an empty sampled corpus");
  }
  std::unordered_set<std::string> known;
  for (const auto& c : training.conversations) {
    for (const auto& ex : c.exchanges) known.insert(ExchangeKey(ex));
  }
  size_t hits = 0;
  for (const auto& c : sampled.conversations) {
    hits += std::any_of(c.exchanges.begin(), c.exchanges.end(),
                        [&](const Exchange& ex) {
                          return known.contains(ExchangeKey(ex));
                        });
  }
  return static_cast<double>(hits) /
         static_cast<double>(sampled.conversations.size());
}

}  // namespace stb::corpus
