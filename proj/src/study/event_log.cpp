// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/study/event_log.hpp"

#include "geneval/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <string>

#include <unistd.h>

namespace geneval::study {

namespace {

// Length of the prefix that ends with the last newline.
std::uintmax_t complete_prefix_length(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto pos = content.rfind('\n');
  return pos == std::string::npos ? 0 : pos + 1;
}

}  // namespace

EventLog::EventLog(std::filesystem::path path, bool sync_each_append) : path_(std::move(path)), sync_(sync_each_append) {
  std::error_code ec;
  if (std::filesystem::exists(path_, ec)) {
    const auto size = std::filesystem::file_size(path_, ec);
    const auto keep = complete_prefix_length(path_);
    if (!ec && keep < size) {
      std::filesystem::resize_file(path_, keep, ec);
      if (ec) throw IoError(fmt::format("cannot truncate torn record in '{}': {}", path_.string(), ec.message()));
    }
  }
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw IoError(fmt::format("cannot open log '{}' for appending", path_.string()));
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

void EventLog::append(const nlohmann::json& record) {
  const std::string line = record.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw IoError(fmt::format("append to '{}' failed", path_.string()));
  }
  if (sync_ && ::fsync(::fileno(file_)) != 0) {
    throw IoError(fmt::format("fsync of '{}' failed", path_.string()));
  }
}

std::vector<nlohmann::json> EventLog::read_all(const std::filesystem::path& path) {
  std::vector<nlohmann::json> records;
  std::ifstream in(path, std::ios::binary);
  if (!in) return records;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    const auto end = content.find('\n', start);
    if (end == std::string::npos) break;  // torn tail
    ++line_no;
    const std::string_view line(content.data() + start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      throw FormatError(fmt::format("{}: line {} is not a JSON object", path.string(), line_no));
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace geneval::study
