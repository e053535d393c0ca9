#include "pluriflow/scenario/snapshot.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pluriflow {

namespace {

constexpr const char* kMagic = "PLURIFLOW-SNAPSHOT";

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
  return r;
}

void append_doubles(std::string& out, const TensorField& f) {
  const double* d = f.raw();
  const std::size_t count = 2 * f.data().size();
  const std::size_t base = out.size();
  out.resize(base + 8 * count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t w = to_little(std::bit_cast<std::uint64_t>(d[i]));
    std::memcpy(&out[base + 8 * i], &w, 8);
  }
}

void read_doubles(const char* src, TensorField& f) {
  double* d = f.raw();
  const std::size_t count = 2 * f.data().size();
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t w;
    std::memcpy(&w, src + 8 * i, 8);
    d[i] = std::bit_cast<double>(to_little(w));
  }
}

std::uint32_t checksum(const char* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  if (!(is >> v)) throw SnapshotError("snapshot header: bad value for '" + key + "'");
  return v;
}

}  // namespace

std::string encode_snapshot(const FlowState& state, const std::string& provenance) {
  require_same_grid(state.g.grid(), state.beta.grid(), "snapshot");
  if (provenance.find('\n') != std::string::npos) {
    throw InvalidArgumentError("snapshot provenance must be a single line");
  }
  std::string payload;
  payload.reserve(16 * (state.g.data().size() + state.beta.data().size()));
  append_doubles(payload, state.g);
  append_doubles(payload, state.beta);

  const ChartGrid& grid = state.g.grid();
  std::ostringstream h;
  h << kMagic << "\n";
  h << "schema " << kSnapshotSchema << "\n";
  h << "n " << grid.n() << "\n";
  h << "points";
  for (int p : grid.points_per_axis()) h << ' ' << p;
  h << "\nperiods";
  for (double p : grid.periods()) h << ' ' << format_double(p);
  h << "\nt " << format_double(state.t) << "\n";
  h << "provenance " << provenance << "\n";
  h << "payload_bytes " << payload.size() << "\n";
  h << "crc32 " << std::hex << std::setw(8) << std::setfill('0')
    << checksum(payload.data(), payload.size()) << std::dec << "\n";
  h << "\n";
  return h.str() + payload;
}

Snapshot decode_snapshot(const std::string& bytes) {
  const std::size_t end = bytes.find("\n\n");
  if (bytes.rfind(kMagic, 0) != 0 || end == std::string::npos) {
    throw SnapshotError("not a snapshot file (missing magic line or header terminator)");
  }
  Snapshot out;
  SnapshotHeader& hd = out.header;
  bool have_schema = false, have_t = false, have_size = false, have_crc = false;
  std::istringstream lines(bytes.substr(0, end));
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const std::size_t sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string val = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "schema") {
      hd.schema = parse_value<int>(key, val);
      have_schema = true;
      if (hd.schema != kSnapshotSchema) {
        throw SnapshotError("unsupported schema " + std::to_string(hd.schema) + " (expected " +
                            std::to_string(kSnapshotSchema) + ")");
      }
    } else if (key == "n") {
      hd.n = parse_value<int>(key, val);
    } else if (key == "points") {
      std::istringstream is(val);
      int p;
      while (is >> p) hd.points.push_back(p);
    } else if (key == "periods") {
      std::istringstream is(val);
      double p;
      while (is >> p) hd.periods.push_back(p);
    } else if (key == "t") {
      hd.t = parse_value<double>(key, val);
      have_t = true;
    } else if (key == "provenance") {
      hd.provenance = val;
    } else if (key == "payload_bytes") {
      hd.payload_bytes = parse_value<std::uint64_t>(key, val);
      have_size = true;
    } else if (key == "crc32") {
      std::istringstream is(val);
      if (!(is >> std::hex >> hd.crc32)) throw SnapshotError("snapshot header: bad crc32");
      have_crc = true;
    } else {
      throw SnapshotError("snapshot header: unknown key '" + key + "'");
    }
  }
  if (!have_schema) throw SnapshotError("unsupported schema: header has no schema line");
  if (!have_t || !have_size || !have_crc) throw SnapshotError("snapshot header incomplete");
  if (hd.n < 1 || hd.n > 2 || static_cast<int>(hd.points.size()) != 2 * hd.n ||
      hd.periods.size() != hd.points.size()) {
    throw SnapshotError("snapshot header: inconsistent dimensions");
  }

  ChartGrid grid;
  try {
    grid = ChartGrid(hd.n, hd.points, hd.periods);
  } catch (const Error& e) {
    throw SnapshotError(std::string("snapshot header: ") + e.what());
  }
  out.state.t = hd.t;
  out.state.g = identity_metric(grid);
  out.state.beta = zero_form(grid);
  const std::uint64_t expected =
      16 * (out.state.g.data().size() + out.state.beta.data().size());
  if (hd.payload_bytes != expected) {
    throw SnapshotError("snapshot header: payload_bytes " + std::to_string(hd.payload_bytes) +
                        " does not match the dimensions (" + std::to_string(expected) + ")");
  }
  const char* payload = bytes.data() + end + 2;
  const std::size_t available = bytes.size() - (end + 2);
  if (available != expected) {
    throw SnapshotError("checksum error: payload has " + std::to_string(available) +
                        " bytes, header promises " + std::to_string(expected));
  }
  if (checksum(payload, available) != hd.crc32) {
    throw SnapshotError("checksum error: crc32 mismatch");
  }
  read_doubles(payload, out.state.g);
  read_doubles(payload + 16 * out.state.g.data().size(), out.state.beta);
  return out;
}

void write_snapshot(const std::string& path, const FlowState& state, const std::string& provenance) {
  const std::string bytes = encode_snapshot(state, provenance);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw SnapshotError("cannot open '" + tmp + "' for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw SnapshotError("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw SnapshotError("cannot move snapshot into place at '" + path + "'");
  }
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SnapshotError("cannot open snapshot '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return decode_snapshot(buf.str());
}

}  // namespace pluriflow
