// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

// GEMB container: a little-endian binary file holding one embedding or
// probability matrix plus its backbone and source label.
//
//   offset  size  field
//   0       4     magic "GEMB"
//   4       2     version (u16) = 1
//   6       1     kind (u8): 0 embeddings, 1 probabilities
//   7       1     reserved (u8) = 0
//   8       8     n (u64)
//   16      8     d (u64)
//   24      2+b   backbone_id: u16 byte length, UTF-8 bytes
//   ..      2+s   source_label: u16 byte length, UTF-8 bytes
//   ..      4nd   payload: float32, row-major
//   ..      8     CRC-64/XZ (u64) of every preceding byte

#pragma once

#include "geneval/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace geneval {

enum class GembKind : std::uint8_t { embeddings = 0, probabilities = 1 };

inline constexpr std::uint16_t kGembVersion = 1;

using AnySet = std::variant<EmbeddingSet, ProbabilitySet>;

GembKind kind_of(const AnySet& set);
const std::string& backbone_of(const AnySet& set);
const std::string& label_of(const AnySet& set);
Index rows_of(const AnySet& set);
const RowMatrix& matrix_of(const AnySet& set);
std::string_view to_string(GembKind kind);
GembKind parse_gemb_kind(std::string_view s);

/// CRC-64/XZ (ECMA-182 polynomial, reflected, all-ones init and xor-out).
std::uint64_t crc64(std::span<const std::uint8_t> bytes);

struct GembHeader {
  std::uint16_t version = kGembVersion;
  GembKind kind = GembKind::embeddings;
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  std::string backbone_id;
  std::string source_label;
};

/// Structurally valid file whose payload has not been semantically checked.
struct GembContents {
  GembHeader header;
  RowMatrix data;
};

/// Exact file size for the given header.
std::uint64_t gemb_size(const GembHeader& header);

/// Throws ValidationError for values outside single-precision range or
/// labels longer than 65535 bytes.
std::vector<std::uint8_t> encode_gemb(const AnySet& set);

/// Checks magic, version, lengths and checksum; throws FormatError.
GembContents decode_gemb_unchecked(std::span<const std::uint8_t> bytes);

/// decode_gemb_unchecked followed by construction of the typed set, which
/// validates probability rows (ValidationError).
AnySet decode_gemb(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file renamed into place. Returns the byte
/// count. Throws IoError on filesystem failures.
std::size_t write_gemb(const AnySet& set, const std::filesystem::path& destination);

AnySet read_gemb(const std::filesystem::path& source);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& source);

}  // namespace geneval
