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

#include "stb/append_log.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stb/error.h"

namespace stb {
namespace {

std::string Errno(const std::string& what, const std::filesystem::path& path) {
  return what + " " + path.string() + ": " + std::strerror(errno);
}

}  // namespace

AppendLog::AppendLog(std::filesystem::path path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorKind::kStorage, Errno("cannot open", path_));
  struct stat st;
  if (::fstat(fd_, &st) != 0) {
    ::close(fd_);
    throw Error(ErrorKind::kStorage, Errno("cannot stat", path_));
  }
  size_ = static_cast<uint64_t>(st.st_size);
  // Drop a torn tail so the next append starts on a fresh line.
  if (size_ > 0) {
    const std::string all = ReadAll();
    const auto last_newline = all.find_last_of('\n');
    const uint64_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
    if (keep != size_) {
      if (::ftruncate(fd_, static_cast<off_t>(keep)) != 0) {
        ::close(fd_);
        throw Error(ErrorKind::kStorage, Errno("cannot truncate", path_));
      }
      size_ = keep;
    }
  }
}

AppendLog::~AppendLog() {
  if (fd_ >= 0) ::close(fd_);
}

uint64_t AppendLog::Append(std::string_view line) {
  std::string buf(line);
  if (buf.find('\n') != std::string::npos) {
    throw Error(ErrorKind::kStorage, "log lines must not contain newlines");
  }
  buf.push_back('\n');
  const uint64_t offset = size_;
  size_t written = 0;
  while (written < buf.size()) {
    const ssize_t n = ::write(fd_, buf.data() + written, buf.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kStorage, Errno("cannot write", path_));
    }
    written += static_cast<size_t>(n);
  }
  if (::fsync(fd_) != 0) throw Error(ErrorKind::kStorage, Errno("cannot fsync", path_));
  size_ += buf.size();
  return offset;
}

std::string AppendLog::ReadAll() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(ErrorKind::kStorage, "cannot read " + path_.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> AppendLog::ReadLines() const {
  const std::string all = ReadAll();
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < all.size()) {
    const size_t end = all.find('\n', pos);
    if (end == std::string::npos) break;
    if (end > pos) lines.push_back(all.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

}  // namespace stb
