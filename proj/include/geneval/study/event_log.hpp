// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <vector>

namespace geneval::study {

/// Append-only newline-delimited JSON log. Not thread-safe; the owner
/// serializes access.
class EventLog {
 public:
  /// Opens (creating if needed) for appending. A torn final line left by a
  /// crash is cut off first.
  explicit EventLog(std::filesystem::path path, bool sync_each_append = true);
  ~EventLog();

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  /// Writes one record and flushes it (fsync when enabled). Throws IoError.
  void append(const nlohmann::json& record);

  const std::filesystem::path& path() const { return path_; }

  /// Every complete record in file order. A final line without a newline
  /// is ignored; any other unparsable line is a FormatError.
  static std::vector<nlohmann::json> read_all(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  bool sync_;
};

}  // namespace geneval::study
