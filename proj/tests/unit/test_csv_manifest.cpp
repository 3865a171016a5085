// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/csv_import.hpp"
#include "geneval/error.hpp"
#include "geneval/manifest_io.hpp"
#include "temp_dir.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <fstream>
#include <sstream>

using namespace geneval;
using geneval::testing::TempDir;

namespace {

AnySet from_text(const std::string& text, GembKind kind, const CsvOptions& opts = {}) {
  std::istringstream in(text);
  return import_csv(in, kind, "base-classifier", "gen", opts, "probs.csv");
}

std::string sha_of(const std::string& s) {
  return sha256_hex({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

ManifestEntry entry(std::string id, std::string path, Split split, std::string checksum) {
  return {std::move(id), std::move(path), "real", split, std::move(checksum)};
}

}  // namespace

TEST_CASE("csv import of a probability matrix") {
  const auto set = from_text("0.5,0.5\n1.0,0.0\n", GembKind::probabilities);
  REQUIRE(kind_of(set) == GembKind::probabilities);
  const auto& p = std::get<ProbabilitySet>(set);
  CHECK(p.n() == 2);
  CHECK(p.class_count() == 2);
  CHECK(p.probs()(1, 0) == 1.0);
}

TEST_CASE("csv structural errors carry the source and line") {
  CHECK_THROWS_WITH_AS(from_text("1,2\n3\n", GembKind::embeddings), "probs.csv: line 2: ragged row with 1 columns, expected 2",
                       FormatError);
  CHECK_THROWS_WITH_AS(from_text("1,2\n3,abc\n", GembKind::embeddings), doctest::Contains("line 2, column 2"),
                       FormatError);
  CHECK_THROWS_AS(from_text("\n\n", GembKind::embeddings), FormatError);
  CHECK_THROWS_AS(from_text("1,,2\n", GembKind::embeddings), FormatError);
  CHECK_THROWS_WITH_AS(from_text("0.7,0.7\n", GembKind::probabilities), doctest::Contains("sums to 1.4"),
                       ValidationError);
}

TEST_CASE("csv options and blank lines") {
  CsvOptions opts;
  opts.skip_header = true;
  opts.delimiter = ';';
  const auto set = from_text("a;b;c\n\n1;2;3\n\n4;5;6\n", GembKind::embeddings, opts);
  const auto& e = std::get<EmbeddingSet>(set);
  CHECK(e.n() == 2);
  CHECK(e.d() == 3);
  CHECK(e.data()(1, 2) == 6.0);
  CHECK(std::get<EmbeddingSet>(from_text("1e-3,-2.5E2\r\n", GembKind::embeddings)).data()(0, 1) == -250.0);
}

TEST_CASE("a 420-row csv yields n = 420") {
  std::string text;
  for (int i = 0; i < 420; ++i) text += fmt::format("{},{},{}\n", i * 0.5, -i, 1.0 / (i + 1));
  const auto set = from_text(text, GembKind::embeddings);
  const auto& e = std::get<EmbeddingSet>(set);
  CHECK(e.n() == 420);
  CHECK(e.data()(419, 0) == 209.5);
}

TEST_CASE("csv import from a file names the file") {
  TempDir tmp;
  std::ofstream(tmp / "bad.csv") << "0.9,0.9\n";
  CHECK_THROWS_WITH_AS(import_csv(tmp / "bad.csv", GembKind::probabilities, "b", "gen"), doctest::Contains("bad.csv"),
                       ValidationError);
  CHECK_THROWS_AS(import_csv(tmp / "none.csv", GembKind::probabilities, "b", "gen"), IoError);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha_of("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha_of("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("manifest json round-trip") {
  const DatasetManifest m("ucm", {entry("a", "img/a.png", Split::train, sha_of("a")),
                                  entry("b", "img/b.png", Split::generated, sha_of("b"))});
  const auto doc = manifest_to_json(m);
  CHECK(doc["dataset"] == "ucm");
  CHECK(doc["entries"][1]["split"] == "generated");
  const auto back = manifest_from_json(doc);
  CHECK(back.dataset() == "ucm");
  REQUIRE(back.entries().size() == 2);
  CHECK(back.entries()[0].checksum == sha_of("a"));
  CHECK(back.count(Split::generated) == 1);
  CHECK(manifest_to_json(back) == doc);

  TempDir tmp;
  write_manifest(m, tmp / "m.json");
  CHECK(manifest_to_json(read_manifest(tmp / "m.json")) == doc);
}

TEST_CASE("manifest schema and invariant errors") {
  using nlohmann::json;
  CHECK_THROWS_AS(manifest_from_json(json::array()), FormatError);
  CHECK_THROWS_AS(manifest_from_json(json{{"entries", json::array()}}), FormatError);
  CHECK_THROWS_WITH_AS(manifest_from_json(json{{"dataset", "x"}, {"entries", {{{"image_id", "a"}}}}}),
                       doctest::Contains("missing string field"), FormatError);

  json entry_doc = {{"image_id", "a"}, {"path", "a.png"}, {"source_label", "real"},
                    {"split", "train"}, {"checksum", sha_of("a")}};
  CHECK_NOTHROW(manifest_from_json(json{{"dataset", "x"}, {"entries", {entry_doc}}}));
  CHECK_THROWS_WITH_AS(manifest_from_json(json{{"dataset", "x"}, {"entries", {entry_doc, entry_doc}}}),
                       doctest::Contains("a"), ValidationError);
  auto bad_split = entry_doc;
  bad_split["split"] = "holdout";
  CHECK_THROWS_AS(manifest_from_json(json{{"dataset", "x"}, {"entries", {bad_split}}}), ValidationError);
  auto bad_sum = entry_doc;
  bad_sum["checksum"] = "xyz";
  CHECK_THROWS_AS(manifest_from_json(json{{"dataset", "x"}, {"entries", {bad_sum}}}), ValidationError);

  TempDir tmp;
  std::ofstream(tmp / "broken.json") << "{not json";
  CHECK_THROWS_WITH_AS(read_manifest(tmp / "broken.json"), doctest::Contains("broken.json"), FormatError);
}

TEST_CASE("verify_manifest_files reports missing and altered files") {
  TempDir tmp;
  std::ofstream(tmp / "a.png", std::ios::binary) << "alpha";
  std::ofstream(tmp / "b.png", std::ios::binary) << "beta";
  const DatasetManifest m("d", {entry("a", "a.png", Split::train, sha_of("alpha")),
                                entry("b", "b.png", Split::val, sha_of("BETA")),
                                entry("c", "c.png", Split::test, sha_of("gamma"))});
  const auto problems = verify_manifest_files(m, tmp.path());
  REQUIRE(problems.size() == 2);
  CHECK(problems[0].find("b: checksum mismatch") == 0);
  CHECK(problems[1].find("c: missing file") == 0);
}
