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

#ifndef STB_CORPUS_H_
#define STB_CORPUS_H_

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

// Conversation data model, ingestion and segmentation.
//
// A conversation is a sequence of exchanges; each exchange holds one turn from
// each of the two entities (slot 0 speaks first). A segment of length k is the
// prefix made of the first k exchanges, which is what an annotator sees.
namespace stb::corpus {

inline constexpr size_t kMaxTurnChars = 2000;

struct Turn {
  int slot = 0;
  std::string text;

  bool operator==(const Turn&) const = default;
};

struct Exchange {
  size_t index = 0;
  std::array<Turn, 2> turns;

  bool operator==(const Exchange&) const = default;
};

enum class EntityKind { kBot, kHuman };

std::string_view EntityKindName(EntityKind kind);
EntityKind ParseEntityKind(std::string_view name);

struct EntityDescriptor {
  EntityKind kind = EntityKind::kBot;
  std::string system_name;

  bool operator==(const EntityDescriptor&) const = default;
};

inline constexpr std::string_view kHumanSystem = "human";

struct Conversation {
  std::string id;
  std::string domain;
  std::array<EntityDescriptor, 2> entities;
  std::vector<Exchange> exchanges;
  std::optional<std::string> seed_source;

  size_t length() const { return exchanges.size(); }
  bool is_bot_bot() const {
    return entities[0].kind == EntityKind::kBot &&
           entities[1].kind == EntityKind::kBot;
  }
  bool operator==(const Conversation&) const = default;
};

struct Corpus {
  std::string domain;
  std::vector<Conversation> conversations;
  std::vector<int> segment_lengths;

  int max_segment_length() const {
    return segment_lengths.empty() ? 0 : segment_lengths.back();
  }
  const Conversation* Find(std::string_view id) const;
};

struct Segment {
  Conversation conversation;  // truncated to its first k exchanges
  int k = 0;
};

// Builds a conversation from plain turn texts, assigning exchange indices and
// slots.
Conversation MakeConversation(
    std::string id, std::string domain,
    std::array<EntityDescriptor, 2> entities,
    const std::vector<std::array<std::string, 2>>& exchanges,
    std::optional<std::string> seed_source = std::nullopt);

// Returns an empty string when `conversation` satisfies every per-conversation
// invariant for the given minimum length, otherwise a description of the first
// violation.
std::string CheckConversation(const Conversation& conversation,
                              size_t min_length);

// Checks segment lengths are positive and strictly ascending.
void CheckSegmentLengths(const std::vector<int>& segment_lengths);

nlohmann::json ToJson(const Conversation& conversation);
// Throws kParse on schema mismatch. Does not check length invariants.
Conversation ConversationFromJson(const nlohmann::json& j);

// Reads one conversation per line. Every line is checked; all offending lines
// are reported together in one error.
Corpus LoadCorpus(const std::filesystem::path& path,
                  std::vector<int> segment_lengths);
Corpus ParseCorpus(std::string_view text, std::vector<int> segment_lengths);

std::string SerializeCorpus(const Corpus& corpus);
void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path);

Segment MakeSegment(const Conversation& conversation, int k);

struct Seed {
  std::string source_id;
  Exchange exchange;
};

Seed ExtractSeed(const Conversation& human_conversation);

// Lowercases and collapses runs of whitespace; trims both ends.
std::string NormalizeText(std::string_view text);

// Fraction of sampled conversations containing at least one exchange whose
// normalized turn pair also occurs as an exchange in `training`.
double TrainingOverlapRate(const Corpus& sampled, const Corpus& training);

}  // namespace stb::corpus

#endif  // STB_CORPUS_H_
