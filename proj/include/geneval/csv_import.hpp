// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "geneval/gemb.hpp"

#include <filesystem>
#include <istream>
#include <string>

namespace geneval {

struct CsvOptions {
  bool skip_header = false;
  char delimiter = ',';
};

/// Parses a numeric CSV into a matrix without checking what the values mean.
RowMatrix read_csv_matrix(std::istream& in, const CsvOptions& options = {}, std::string_view source_name = "<csv>");

/// Parses a numeric CSV (blank lines ignored) into a typed set. Ragged rows
/// and non-numeric cells raise FormatError naming `source_name` and the
/// line; probability rows are validated as in read_gemb.
AnySet import_csv(std::istream& in, GembKind kind, std::string backbone_id, std::string source_label,
                  const CsvOptions& options = {}, std::string_view source_name = "<csv>");

AnySet import_csv(const std::filesystem::path& path, GembKind kind, std::string backbone_id,
                  std::string source_label, const CsvOptions& options = {});

}  // namespace geneval
