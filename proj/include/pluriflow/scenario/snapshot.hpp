#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pluriflow/flow/pluriclosed_flow.hpp"

namespace pluriflow {

inline constexpr int kSnapshotSchema = 1;

struct SnapshotHeader {
  int schema = kSnapshotSchema;
  int n = 0;
  std::vector<int> points;
  std::vector<double> periods;
  double t = 0.0;
  std::string provenance;  // single line
  std::uint64_t payload_bytes = 0;
  std::uint32_t crc32 = 0;
};

struct Snapshot {
  SnapshotHeader header;
  FlowState state;
};

/// Header lines "key value", a blank line, then the payload: little-endian doubles,
/// interleaved re/im, point-major with components fastest, g block then beta block.
std::string encode_snapshot(const FlowState& state, const std::string& provenance);
/// Throws SnapshotError on malformed headers, unsupported schema, size or checksum mismatch.
Snapshot decode_snapshot(const std::string& bytes);

void write_snapshot(const std::string& path, const FlowState& state, const std::string& provenance);
Snapshot read_snapshot(const std::string& path);

}  // namespace pluriflow
