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

#ifndef STB_APPEND_LOG_H_
#define STB_APPEND_LOG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stb {

// Line-delimited append-only file. Append() returns only after the line has
// reached stable storage.
class AppendLog {
 public:
  explicit AppendLog(std::filesystem::path path);
  ~AppendLog();
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;

  // Byte offset at which `line` starts. Throws kStorage on any I/O failure.
  uint64_t Append(std::string_view line);

  // Complete lines currently on disk. A torn final line (no newline) from an
  // interrupted write is ignored.
  std::vector<std::string> ReadLines() const;
  std::string ReadAll() const;

  const std::filesystem::path& path() const { return path_; }
  uint64_t size() const { return size_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  uint64_t size_ = 0;
};

}  // namespace stb

#endif  // STB_APPEND_LOG_H_
