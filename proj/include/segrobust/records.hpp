// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Little-endian record container shared by checkpoints and dataset dumps:
//
//   "SGRB" | u32 version | u32 record_count
//   record_count x ( u32 name_len | name | u8 dtype | u32 rank | rank x u64 dim
//                    | u64 payload_len | payload )
//   u32 crc32 of every preceding byte
namespace segrobust::records {

inline constexpr char kMagic[4] = {'S', 'G', 'R', 'B'};

enum class DType : std::uint8_t { F64 = 0, U8 = 1, Json = 2 };

struct Record {
  std::string name;
  DType dtype = DType::F64;
  Shape shape;
  std::vector<std::uint8_t> payload;
};

Record from_tensor(std::string name, const Tensor& t);
Record from_bytes(std::string name, Shape shape, std::span<const std::uint8_t> bytes);
Record from_json_text(std::string name, std::string_view text);

Tensor to_tensor(const Record& r);
std::vector<std::uint8_t> to_bytes(const Record& r);
std::string to_json_text(const Record& r);

std::vector<std::uint8_t> encode(std::uint32_t version, const std::vector<Record>& records);
/// Throws FormatError on bad magic, version, framing or checksum.
std::vector<Record> decode(std::span<const std::uint8_t> bytes, std::uint32_t expected_version);

void write_file(const std::filesystem::path& path, std::uint32_t version, const std::vector<Record>& records);
std::vector<Record> read_file(const std::filesystem::path& path, std::uint32_t expected_version);

const Record& find(const std::vector<Record>& records, std::string_view name);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace segrobust::records
