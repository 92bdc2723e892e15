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

#include "stb/annotation.h"

#include <fstream>
#include <sstream>

#include "stb/error.h"

namespace stb::annotation {
namespace {

using nlohmann::json;

std::string_view TrimView(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view LabelName(EntityLabel label) {
  switch (label) {
    case EntityLabel::kBot: return "bot";
    case EntityLabel::kUnsure: return "unsure";
    case EntityLabel::kHuman: return "human";
  }
  return "unsure";
}

EntityLabel ParseLabel(std::string_view name) {
  if (name == "bot") return EntityLabel::kBot;
  if (name == "unsure") return EntityLabel::kUnsure;
  if (name == "human") return EntityLabel::kHuman;
  throw Error(ErrorKind::kParse, "unknown label \"" + std::string(name) + "\"");
}

std::string_view FeatureName(Feature feature) {
  switch (feature) {
    case Feature::kFluency: return "fluency";
    case Feature::kSpecificity: return "specificity";
    case Feature::kSensibleness: return "sensibleness";
  }
  return "fluency";
}

Feature ParseFeature(std::string_view name) {
  for (Feature f : kFeatures) {
    if (FeatureName(f) == name) return f;
  }
  if (name == "ssa") {
    throw Error(ErrorKind::kParse, "ssa is a mode, not a feature");
  }
  throw Error(ErrorKind::kParse, "unknown feature \"" + std::string(name) + "\"");
}

std::string_view ChoiceName(Choice choice) {
  switch (choice) {
    case Choice::kFirst: return "first";
    case Choice::kTie: return "tie";
    case Choice::kSecond: return "second";
  }
  return "tie";
}

Choice ParseChoice(std::string_view name) {
  if (name == "first") return Choice::kFirst;
  if (name == "tie") return Choice::kTie;
  if (name == "second") return Choice::kSecond;
  throw Error(ErrorKind::kParse, "unknown choice \"" + std::string(name) + "\"");
}

Choice AnnotationRecord::preference(Feature feature) const {
  const auto& p = preferences[static_cast<size_t>(feature)];
  if (!p) {
    throw Error(ErrorKind::kMissingFeature,
                "record " + item_id + "/" + worker_id + " lacks " +
                    std::string(FeatureName(feature)));
  }
  return *p;
}

int EncodeFeature(Choice choice, int slot) {
  if (choice == Choice::kTie) return 0;
  const int preferred = choice == Choice::kFirst ? 0 : 1;
  return preferred == slot ? 1 : -1;
}

json ToJson(const AnnotationRecord& r) {
  json prefs = json::object();
  for (Feature f : kFeatures) {
    const auto& p = r.preferences[static_cast<size_t>(f)];
    if (p) prefs[std::string(FeatureName(f))] = ChoiceName(*p);
  }
  return {{"item_id", r.item_id},
          {"worker_id", r.worker_id},
          {"labels", json::array({LabelName(r.labels[0]), LabelName(r.labels[1])})},
          {"preferences", std::move(prefs)},
          {"duration_seconds", r.duration_seconds},
          {"submitted_at", r.submitted_at}};
}

AnnotationRecord RecordFromJson(const json& j) {
  try {
    AnnotationRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    r.worker_id = j.at("worker_id").get<std::string>();
    const json& labels = j.at("labels");
    if (!labels.is_array() || labels.size() != 2) {
      throw Error(ErrorKind::kParse, "labels must be an array of 2 strings");
    }
    r.labels = {ParseLabel(labels[0].get<std::string>()),
                ParseLabel(labels[1].get<std::string>())};
    const json& prefs = j.at("preferences");
    if (!prefs.is_object()) {
      throw Error(ErrorKind::kParse, "preferences must be an object");
    }
    for (const auto& [name, value] : prefs.items()) {
      r.set_preference({ParseFeature(name), ParseChoice(value.get<std::string>())});
    }
    r.duration_seconds = j.value("duration_seconds", 0.0);
    if (!(r.duration_seconds >= 0.0)) {
      throw Error(ErrorKind::kParse, "duration_seconds must be >= 0");
    }
    r.submitted_at = j.value("submitted_at", std::string());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, e.what());
  }
}

void AnnotationValidator::Validate(const AnnotationRecord& record) const {
  if (plan_.FindItem(record.item_id) == nullptr) {
    throw Error(ErrorKind::kUnknownItem, "item " + record.item_id);
  }
  for (Feature f : kFeatures) {
    if (!record.preferences[static_cast<size_t>(f)]) {
      throw Error(ErrorKind::kMissingFeature,
                  std::string(FeatureName(f)) + " preference is absent");
    }
  }
  if (ledger_ != nullptr && !ledger_->IsAssigned(record.worker_id, record.item_id)) {
    throw Error(ErrorKind::kUnassignedWorker,
                "worker " + record.worker_id + " holds no batch with item " +
                    record.item_id);
  }
  if (seen_.contains({record.item_id, record.worker_id})) {
    throw Error(ErrorKind::kDuplicate,
                "item " + record.item_id + " already annotated by " +
                    record.worker_id);
  }
}

void AnnotationValidator::Accept(const AnnotationRecord& record) {
  Validate(record);
  seen_.insert({record.item_id, record.worker_id});
}

ImportResult ParseAnnotations(std::string_view text,
                              const batching::Plan& plan,
                              const batching::AssignmentLedger* ledger) {
  ImportResult result;
  AnnotationValidator validator(plan, ledger);
  size_t line_no = 0;
  size_t pos = 0;
  size_t non_empty = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = TrimView(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    ++non_empty;
    AnnotationRecord record;
    try {
      record = RecordFromJson(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      validator.Accept(record);
      result.records.push_back(std::move(record));
    } catch (const Error& e) {
      result.rejected.push_back({line_no, e.what()});
    }
  }
  if (non_empty > 0 && result.records.empty()) {
    throw Error(ErrorKind::kPrecondition,
                "no valid records among " + std::to_string(non_empty) +
                    "; first problem: " + result.rejected.front().reason);
  }
  return result;
}

ImportResult ImportAnnotations(const std::filesystem::path& path,
                               const batching::Plan& plan,
                               const batching::AssignmentLedger* ledger) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseAnnotations(buffer.str(), plan, ledger);
}

std::string SerializeAnnotations(std::span<const AnnotationRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += ToJson(r).dump();
    out += '\n';
  }
  return out;
}

void ExportAnnotations(const std::filesystem::path& path,
                       std::span<const AnnotationRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kStorage, "cannot write " + path.string());
  out << SerializeAnnotations(records);
}

std::vector<Judgment> Resolve(std::span<const AnnotationRecord> records,
                              const batching::Plan& plan) {
  std::vector<Judgment> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const batching::SegmentItem* item = plan.FindItem(r.item_id);
    if (item == nullptr) throw Error(ErrorKind::kUnknownItem, "item " + r.item_id);
    const corpus::Conversation* c = plan.FindConversation(item->conversation_id);
    if (c == nullptr) {
      throw Error(ErrorKind::kUnknownItem,
                  "conversation " + item->conversation_id + " of item " + r.item_id);
    }
    Judgment j;
    j.item_id = r.item_id;
    j.worker_id = r.worker_id;
    j.conversation_id = item->conversation_id;
    j.domain = c->domain;
    j.k = item->k;
    j.kind = item->kind;
    for (int s = 0; s < 2; ++s) {
      j.systems[s] = c->entities[s].system_name;
      j.truth[s] = c->entities[s].kind;
    }
    j.labels = r.labels;
    for (Feature f : kFeatures) {
      j.preferences[static_cast<size_t>(f)] = r.preference(f);
    }
    j.duration_seconds = r.duration_seconds;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace stb::annotation
