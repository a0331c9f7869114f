// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/records.hpp"

#include "segrobust/error.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace segrobust::records {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError("record file truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::size_t element_size(DType d) { return d == DType::F64 ? 8 : 1; }

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  c = ::crc32(c, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(c);
}

Record from_tensor(std::string name, const Tensor& t) {
  Record r{std::move(name), DType::F64, t.shape(), {}};
  r.payload.reserve(t.size() * 8);
  for (double v : t.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) r.payload.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return r;
}

Record from_bytes(std::string name, Shape shape, std::span<const std::uint8_t> bytes) {
  if (shape_numel(shape) != bytes.size()) throw ShapeError("byte record size does not match its shape");
  return Record{std::move(name), DType::U8, std::move(shape), {bytes.begin(), bytes.end()}};
}

Record from_json_text(std::string name, std::string_view text) {
  Record r{std::move(name), DType::Json, {text.size()}, {}};
  r.payload.assign(text.begin(), text.end());
  return r;
}

Tensor to_tensor(const Record& r) {
  if (r.dtype != DType::F64) throw FormatError("record '" + r.name + "' is not f64");
  Tensor t(r.shape);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(r.payload[i * 8 + b]) << (8 * b);
    t[i] = std::bit_cast<double>(bits);
  }
  return t;
}

std::vector<std::uint8_t> to_bytes(const Record& r) {
  if (r.dtype != DType::U8) throw FormatError("record '" + r.name + "' is not u8");
  return r.payload;
}

std::string to_json_text(const Record& r) {
  if (r.dtype != DType::Json) throw FormatError("record '" + r.name + "' is not json");
  return std::string(r.payload.begin(), r.payload.end());
}

std::vector<std::uint8_t> encode(std::uint32_t version, const std::vector<Record>& records) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const Record& r : records) {
    if (r.payload.size() != shape_numel(r.shape) * element_size(r.dtype)) {
      throw FormatError("record '" + r.name + "' payload does not match its shape");
    }
    w.u32(static_cast<std::uint32_t>(r.name.size()));
    w.raw({reinterpret_cast<const std::uint8_t*>(r.name.data()), r.name.size()});
    w.u8(static_cast<std::uint8_t>(r.dtype));
    w.u32(static_cast<std::uint32_t>(r.shape.size()));
    for (std::size_t d : r.shape) w.u64(d);
    w.u64(r.payload.size());
    w.raw(r.payload);
  }
  w.u32(crc32(w.bytes()));
  return std::move(w.bytes());
}

std::vector<Record> decode(std::span<const std::uint8_t> bytes, std::uint32_t expected_version) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic: not an SGRB file");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (tail.u32() != crc32(body)) throw FormatError("checksum mismatch");
  Reader r(body);
  r.take(4);
  const std::uint32_t version = r.u32();
  if (version != expected_version) {
    throw FormatError("version mismatch: file has " + std::to_string(version) + ", expected " +
                      std::to_string(expected_version));
  }
  const std::uint32_t count = r.u32();
  std::vector<Record> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Record rec;
    auto name = r.take(r.u32());
    rec.name.assign(name.begin(), name.end());
    const std::uint8_t dt = r.u8();
    if (dt > static_cast<std::uint8_t>(DType::Json)) throw FormatError("unknown dtype in record '" + rec.name + "'");
    rec.dtype = static_cast<DType>(dt);
    rec.shape.resize(r.u32());
    for (auto& d : rec.shape) d = r.u64();
    const std::uint64_t len = r.u64();
    if (len != shape_numel(rec.shape) * element_size(rec.dtype)) {
      throw FormatError("record '" + rec.name + "' payload does not match its shape");
    }
    auto payload = r.take(len);
    rec.payload.assign(payload.begin(), payload.end());
    out.push_back(std::move(rec));
  }
  if (r.pos() != body.size()) throw FormatError("trailing bytes after last record");
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputMissingError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, std::uint32_t version, const std::vector<Record>& records) {
  write_bytes(path, encode(version, records));
}

std::vector<Record> read_file(const std::filesystem::path& path, std::uint32_t expected_version) {
  const auto bytes = read_bytes(path);
  try {
    return decode(bytes, expected_version);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

const Record& find(const std::vector<Record>& records, std::string_view name) {
  for (const Record& r : records) {
    if (r.name == name) return r;
  }
  throw FormatError("missing record '" + std::string(name) + "'");
}

}  // namespace segrobust::records
