// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

// JSON dataset manifests:
//   {"dataset": "...", "entries": [{"image_id", "path", "source_label",
//                                   "split", "checksum"}]}
// where split is one of train/val/test/generated and checksum is the
// lowercase hex SHA-256 of the image file.

#pragma once

#include "geneval/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace geneval {

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
/// Throws FormatError for schema problems and ValidationError for manifest
/// invariant violations.
DatasetManifest manifest_from_json(const nlohmann::json& doc);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

/// Hashes every entry's file (paths relative to `root`) and returns one
/// message per missing file or checksum mismatch.
std::vector<std::string> verify_manifest_files(const DatasetManifest& manifest, const std::filesystem::path& root);

}  // namespace geneval
