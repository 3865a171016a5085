// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/csv_import.hpp"

#include "geneval/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <vector>

namespace geneval {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_cell(std::string_view cell, std::string_view source, std::size_t line, std::size_t column) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw FormatError(fmt::format("{}: line {}, column {}: non-numeric cell '{}'", source, line, column, cell));
  }
  return value;
}

}  // namespace

RowMatrix read_csv_matrix(std::istream& in, const CsvOptions& options, std::string_view source_name) {
  std::vector<double> values;
  std::size_t columns = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool header_pending = options.skip_header;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t end = view.find(options.delimiter, start);
      const auto cell = view.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
      values.push_back(parse_cell(cell, source_name, line_no, count + 1));
      ++count;
      if (end == std::string_view::npos) break;
      start = end + 1;
    }
    if (rows == 0) {
      columns = count;
    } else if (count != columns) {
      throw FormatError(
          fmt::format("{}: line {}: ragged row with {} columns, expected {}", source_name, line_no, count, columns));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError(fmt::format("{}: no data rows", source_name));

  return Eigen::Map<const RowMatrix>(values.data(), static_cast<Index>(rows), static_cast<Index>(columns));
}

AnySet import_csv(std::istream& in, GembKind kind, std::string backbone_id, std::string source_label,
                  const CsvOptions& options, std::string_view source_name) {
  RowMatrix m = read_csv_matrix(in, options, source_name);
  if (kind == GembKind::probabilities) {
    return ProbabilitySet(std::move(m), std::move(backbone_id), std::move(source_label));
  }
  return EmbeddingSet(std::move(m), std::move(backbone_id), std::move(source_label));
}

AnySet import_csv(const std::filesystem::path& path, GembKind kind, std::string backbone_id,
                  std::string source_label, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    return import_csv(in, kind, std::move(backbone_id), std::move(source_label), options, path.string());
  } catch (const FormatError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace geneval
