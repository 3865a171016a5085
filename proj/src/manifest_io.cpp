// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/manifest_io.hpp"

#include "geneval/error.hpp"
#include "geneval/gemb.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <fstream>
#include <memory>

namespace geneval {

namespace {

std::string required_string(const nlohmann::json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw FormatError(fmt::format("manifest entry {}: missing string field '{}'", index, key));
  }
  return it->get<std::string>();
}

}  // namespace

nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries()) {
    entries.push_back({{"image_id", e.image_id},
                       {"path", e.path},
                       {"source_label", e.source_label},
                       {"split", std::string(to_string(e.split))},
                       {"checksum", e.checksum}});
  }
  return {{"dataset", manifest.dataset()}, {"entries", std::move(entries)}};
}

DatasetManifest manifest_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw FormatError("manifest must be a JSON object");
  auto dataset = doc.find("dataset");
  if (dataset == doc.end() || !dataset->is_string()) throw FormatError("manifest: missing string field 'dataset'");
  auto entries = doc.find("entries");
  if (entries == doc.end() || !entries->is_array()) throw FormatError("manifest: missing array field 'entries'");

  std::vector<ManifestEntry> parsed;
  parsed.reserve(entries->size());
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const auto& obj = (*entries)[i];
    if (!obj.is_object()) throw FormatError(fmt::format("manifest entry {} is not an object", i));
    ManifestEntry e;
    e.image_id = required_string(obj, "image_id", i);
    e.path = required_string(obj, "path", i);
    e.source_label = required_string(obj, "source_label", i);
    e.split = parse_split(required_string(obj, "split", i));
    e.checksum = required_string(obj, "checksum", i);
    parsed.push_back(std::move(e));
  }
  return DatasetManifest(dataset->get<std::string>(), std::move(parsed));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw FormatError(fmt::format("{}: not valid JSON", path.string()));
  try {
    return manifest_from_json(doc);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file_hex(const std::filesystem::path& path) { return sha256_hex(read_file_bytes(path)); }

std::vector<std::string> verify_manifest_files(const DatasetManifest& manifest, const std::filesystem::path& root) {
  std::vector<std::string> problems;
  for (const auto& e : manifest.entries()) {
    const auto file = root / e.path;
    if (!std::filesystem::is_regular_file(file)) {
      problems.push_back(fmt::format("{}: missing file '{}'", e.image_id, file.string()));
      continue;
    }
    const std::string actual = sha256_file_hex(file);
    if (normalize_label(e.checksum) != actual) {
      problems.push_back(fmt::format("{}: checksum mismatch for '{}' (manifest {}, file {})", e.image_id,
                                     file.string(), e.checksum, actual));
    }
  }
  return problems;
}

}  // namespace geneval
