// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/gemb.hpp"

#include "geneval/error.hpp"

#include <boost/crc.hpp>
#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

namespace geneval {

namespace {

constexpr std::uint8_t kMagic[4] = {'G', 'E', 'M', 'B'};
constexpr std::size_t kFixedHeaderBytes = 4 + 2 + 1 + 1 + 8 + 8;

using Crc64Xz = boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true>;

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { out_.reserve(reserve); }

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void short_string(const std::string& s, const char* field) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError(fmt::format("{} is longer than 65535 bytes", field));
    }
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  void put_le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8(const char* where) { return static_cast<std::uint8_t>(get_le(1, where)); }
  std::uint16_t u16(const char* where) { return static_cast<std::uint16_t>(get_le(2, where)); }
  std::uint32_t u32(const char* where) { return static_cast<std::uint32_t>(get_le(4, where)); }
  std::uint64_t u64(const char* where) { return get_le(8, where); }
  std::string short_string(const char* where) {
    const std::uint16_t len = u16(where);
    need(len, where);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t count, const char* where) const {
    if (remaining() < count) throw FormatError(fmt::format("unexpected end of {}", where));
  }
  std::uint64_t get_le(int width, const char* where) {
    need(static_cast<std::size_t>(width), where);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GembKind kind_of(const AnySet& set) {
  return std::holds_alternative<EmbeddingSet>(set) ? GembKind::embeddings : GembKind::probabilities;
}

const std::string& backbone_of(const AnySet& set) {
  return std::visit([](const auto& s) -> const std::string& { return s.backbone_id(); }, set);
}

const std::string& label_of(const AnySet& set) {
  return std::visit([](const auto& s) -> const std::string& { return s.source_label(); }, set);
}

Index rows_of(const AnySet& set) {
  return std::visit([](const auto& s) { return s.n(); }, set);
}

const RowMatrix& matrix_of(const AnySet& set) {
  if (const auto* e = std::get_if<EmbeddingSet>(&set)) return e->data();
  return std::get<ProbabilitySet>(set).probs();
}

std::string_view to_string(GembKind kind) {
  return kind == GembKind::embeddings ? "embeddings" : "probabilities";
}

GembKind parse_gemb_kind(std::string_view s) {
  if (labels_equal(s, "embeddings") || labels_equal(s, "embedding")) return GembKind::embeddings;
  if (labels_equal(s, "probabilities") || labels_equal(s, "probs")) return GembKind::probabilities;
  throw ValidationError(fmt::format("unknown kind '{}' (expected embeddings or probabilities)", s));
}

std::uint64_t crc64(std::span<const std::uint8_t> bytes) {
  Crc64Xz crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::uint64_t gemb_size(const GembHeader& header) {
  return kFixedHeaderBytes + 2 + header.backbone_id.size() + 2 + header.source_label.size() +
         4 * header.n * header.d + 8;
}

std::vector<std::uint8_t> encode_gemb(const AnySet& set) {
  const RowMatrix& m = matrix_of(set);
  GembHeader header;
  header.kind = kind_of(set);
  header.n = static_cast<std::uint64_t>(m.rows());
  header.d = static_cast<std::uint64_t>(m.cols());
  header.backbone_id = backbone_of(set);
  header.source_label = label_of(set);

  ByteWriter w(static_cast<std::size_t>(gemb_size(header)));
  w.bytes(kMagic);
  w.u16(header.version);
  w.u8(static_cast<std::uint8_t>(header.kind));
  w.u8(0);
  w.u64(header.n);
  w.u64(header.d);
  w.short_string(header.backbone_id, "backbone_id");
  w.short_string(header.source_label, "source_label");
  constexpr double kFloatMax = std::numeric_limits<float>::max();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (std::abs(v) > kFloatMax) {
        throw ValidationError(fmt::format("value {} at ({},{}) is outside single-precision range", v, i, j));
      }
      w.u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  const std::uint64_t crc = crc64(w.buffer());
  w.u64(crc);
  return std::move(w.buffer());
}

GembContents decode_gemb_unchecked(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (std::uint8_t expected : kMagic) {
    if (r.u8("header") != expected) throw FormatError("bad magic (not a GEMB file)");
  }
  GembContents out;
  out.header.version = r.u16("header");
  if (out.header.version != kGembVersion) {
    throw FormatError(fmt::format("unsupported GEMB version {}", out.header.version));
  }
  const std::uint8_t kind = r.u8("header");
  if (kind > 1) throw FormatError(fmt::format("unknown GEMB kind {}", kind));
  out.header.kind = static_cast<GembKind>(kind);
  if (r.u8("header") != 0) throw FormatError("reserved header byte is not zero");
  out.header.n = r.u64("header");
  out.header.d = r.u64("header");
  out.header.backbone_id = r.short_string("header");
  out.header.source_label = r.short_string("header");

  const std::uint64_t n = out.header.n;
  const std::uint64_t d = out.header.d;
  if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
    throw FormatError(fmt::format("declared shape {}x{} overflows", n, d));
  }
  const std::uint64_t payload = 4 * n * d;
  if (r.remaining() < 8 || r.remaining() - 8 < payload) throw FormatError("unexpected end of payload");
  if (r.remaining() - 8 > payload) {
    throw FormatError(fmt::format("declared shape {}x{} does not match payload length ({} trailing bytes)", n, d,
                                  r.remaining() - 8 - payload));
  }
  const std::size_t body = r.position() + static_cast<std::size_t>(payload);
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + static_cast<std::size_t>(i)]) << (8 * i);
  const std::uint64_t actual = crc64(bytes.first(body));
  if (stored != actual) {
    throw FormatError(fmt::format("checksum mismatch (stored {:016x}, computed {:016x})", stored, actual));
  }

  out.data.resize(static_cast<Index>(n), static_cast<Index>(d));
  for (Index i = 0; i < out.data.rows(); ++i) {
    for (Index j = 0; j < out.data.cols(); ++j) {
      out.data(i, j) = static_cast<double>(std::bit_cast<float>(r.u32("payload")));
    }
  }
  return out;
}

AnySet decode_gemb(std::span<const std::uint8_t> bytes) {
  GembContents c = decode_gemb_unchecked(bytes);
  if (c.header.kind == GembKind::probabilities) {
    return ProbabilitySet(std::move(c.data), std::move(c.header.backbone_id), std::move(c.header.source_label));
  }
  return EmbeddingSet(std::move(c.data), std::move(c.header.backbone_id), std::move(c.header.source_label));
}

std::size_t write_gemb(const AnySet& set, const std::filesystem::path& destination) {
  const auto bytes = encode_gemb(set);
  auto tmp = destination;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, destination, ec);
  if (ec) throw IoError(fmt::format("cannot move '{}' into place: {}", destination.string(), ec.message()));
  return bytes.size();
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", source.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(fmt::format("read from '{}' failed", source.string()));
  return bytes;
}

AnySet read_gemb(const std::filesystem::path& source) {
  const auto bytes = read_file_bytes(source);
  try {
    return decode_gemb(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", source.string(), e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", source.string(), e.what()));
  }
}

}  // namespace geneval
