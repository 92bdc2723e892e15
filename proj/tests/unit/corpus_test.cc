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

#include <string>

#include "gtest/gtest.h"
#include "stb/error.h"
#include "synth.h"

namespace stb::corpus {
namespace {

using testing::BotConversation;
using testing::HumanConversation;

std::string Lines(std::initializer_list<Conversation> cs) {
  std::string out;
  for (const auto& c : cs) out += ToJson(c).dump() + "\n";
  return out;
}

TEST(CorpusTest, ParsesValidConversations) {
  const auto text = Lines({BotConversation("c1", "A", "B", 5), BotConversation("c2", "A", "C", 5)});
  const Corpus c = ParseCorpus(text, {2, 3, 5});
  ASSERT_EQ(c.conversations.size(), 2u);
  EXPECT_EQ(c.conversations[0], BotConversation("c1", "A", "B", 5));
  EXPECT_EQ(c.domain, "dailydialog");
}

TEST(CorpusTest, ShortConversationIsAnInvariantViolation) {
  const auto text = Lines({BotConversation("ok", "A", "B", 5), BotConversation("short", "A", "B", 2)});
  try {
    ParseCorpus(text, {2, 3, 5});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvariant);
    EXPECT_NE(std::string(e.what()).find("short"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(CorpusTest, EmptyInputGivesEmptyCorpus) {
  EXPECT_TRUE(ParseCorpus("", {2, 3, 5}).conversations.empty());
}

TEST(CorpusTest, MalformedLineIsAParseError) {
  try {
    ParseCorpus(Lines({BotConversation("c1", "A", "B", 5)}) + "{not json\n", {2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(CorpusTest, RejectsMixedConversations) {
  Conversation c = BotConversation("mixed", "A", "B", 5);
  c.entities[1] = {EntityKind::kHuman, "human"};
  EXPECT_FALSE(CheckConversation(c, 5).empty());
}

TEST(CorpusTest, RejectsHumanWithSystemName) {
  Conversation c = HumanConversation("h", 5);
  c.entities[0].system_name = "alice";
  EXPECT_FALSE(CheckConversation(c, 5).empty());
}

TEST(CorpusTest, RejectsDuplicateIds) {
  const auto text = Lines({BotConversation("c1", "A", "B", 5), BotConversation("c1", "A", "B", 5)});
  EXPECT_THROW(ParseCorpus(text, {2}), Error);
}

TEST(CorpusTest, SegmentLengthsMustAscend) {
  EXPECT_THROW(CheckSegmentLengths({3, 2}), Error);
  EXPECT_THROW(CheckSegmentLengths({0, 2}), Error);
  EXPECT_NO_THROW(CheckSegmentLengths({2, 3, 5}));
}

TEST(CorpusTest, SerializeRoundTrips) {
  Corpus c;
  c.domain = "dailydialog";
  c.segment_lengths = {2, 3, 5};
  c.conversations = {BotConversation("c1", "A", "B", 6), HumanConversation("h1", 5)};
  c.conversations[0].seed_source = "h9";
  const Corpus back = ParseCorpus(SerializeCorpus(c), {2, 3, 5});
  EXPECT_EQ(back.conversations, c.conversations);
}

TEST(CorpusTest, SegmentIsPrefix) {
  const Conversation c = BotConversation("c", "A", "B", 6);
  const Segment s = MakeSegment(c, 3);
  ASSERT_EQ(s.conversation.exchanges.size(), 3u);
  for (size_t i = 0; i < 3; ++i) EXPECT_EQ(s.conversation.exchanges[i], c.exchanges[i]);
  EXPECT_EQ(s.conversation.entities, c.entities);
  EXPECT_EQ(s.k, 3);
  EXPECT_EQ(MakeSegment(c, 6).conversation, c);
  EXPECT_THROW(MakeSegment(BotConversation("d", "A", "B", 5), 7), Error);
}

TEST(CorpusTest, SeedIsFirstExchange) {
  const Conversation c = HumanConversation("h", 3);
  const Seed s = ExtractSeed(c);
  EXPECT_EQ(s.exchange, c.exchanges[0]);
  EXPECT_EQ(s.source_id, "h");
  EXPECT_EQ(ExtractSeed(HumanConversation("one", 1)).exchange, HumanConversation("one", 1).exchanges[0]);
  Conversation empty = HumanConversation("e", 0);
  EXPECT_THROW(ExtractSeed(empty), Error);
}

TEST(CorpusTest, NormalizeText) {
  EXPECT_EQ(NormalizeText("  Hello \t  World\n"), "hello world");
}

TEST(CorpusTest, OverlapRate) {
  Corpus training;
  training.conversations.push_back(HumanConversation("train", 3));
  Corpus sampled;
  for (int i = 0; i < 50; ++i) {
    sampled.conversations.push_back(BotConversation("s" + std::to_string(i), "A", "B", 5));
  }
  EXPECT_EQ(TrainingOverlapRate(sampled, training), 0.0);

  // One conversation copies a training exchange, modulo case and spacing.
  auto& ex = sampled.conversations[17].exchanges[2];
  ex.turns[0].text = "  TRAIN says   line 1";
  ex.turns[1].text = "train answers line 1 ";
  EXPECT_DOUBLE_EQ(TrainingOverlapRate(sampled, training), 0.02);

  EXPECT_EQ(TrainingOverlapRate(sampled, sampled), 1.0);
  try {
    TrainingOverlapRate(Corpus{}, training);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUndefinedRate);
  }
}

}  // namespace
}  // namespace stb::corpus
