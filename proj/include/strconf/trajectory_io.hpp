#pragma once

// STRJ: binary container for hidden-state trajectories.
//
// Layout (all integers little-endian, floats IEEE-754 binary32 LE):
//   magic "STRJ" | version u16 (=1) | flags u16 | record_count u64
//   | hidden_dim u32 | semantic_dim u32
// then per record:
//   id_len u16 | id bytes | [label u8 if flags&1] | T u32
//   | T*D floats row-major | [semantic_dim floats if flags&2]

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "strconf/error.hpp"

namespace strconf {

enum class Label : std::uint8_t { incorrect = 0, correct = 1, unknown = 255 };

using StateMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kMaxTokens = 256;

struct Trajectory {
  std::string id;
  Label label = Label::unknown;
  StateMatrix states;  // T x D, row t = hidden state of token t
  std::optional<std::vector<float>> semantic;

  std::size_t length() const { return static_cast<std::size_t>(states.rows()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(states.cols()); }

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.id == b.id && a.label == b.label &&
           a.states.rows() == b.states.rows() &&
           a.states.cols() == b.states.cols() && a.states == b.states &&
           a.semantic == b.semantic;
  }
};

namespace file_flags {
inline constexpr std::uint16_t labels = 1u << 0;
inline constexpr std::uint16_t semantic = 1u << 1;
}  // namespace file_flags

struct TrajectoryFileHeader {
  static constexpr std::array<char, 4> kMagic{'S', 'T', 'R', 'J'};
  static constexpr std::uint16_t kVersion = 1;
  static constexpr std::size_t kSize = 24;

  std::uint16_t version = kVersion;
  std::uint16_t flags = 0;
  std::uint64_t record_count = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t semantic_dim = 0;

  bool has_labels() const { return (flags & file_flags::labels) != 0; }
  bool has_semantic() const { return (flags & file_flags::semantic) != 0; }
};

namespace detail {

template <typename UInt>
void put_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
  }
  out.write(bytes.data(), bytes.size());
}

inline void put_f32(std::ostream& out, float value) {
  put_le(out, std::bit_cast<std::uint32_t>(value));
}

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  // `where` names the structure being read, for truncation messages.
  void read(char* dst, std::size_t n, const std::string& where) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw ValidationError("STRJ: truncated payload in " + where);
    }
  }

  template <typename UInt>
  UInt get_le(const std::string& where) {
    std::array<unsigned char, sizeof(UInt)> bytes{};
    read(reinterpret_cast<char*>(bytes.data()), bytes.size(), where);
    UInt value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      value |= static_cast<UInt>(bytes[i]) << (8 * i);
    }
    return value;
  }

  void get_f32_block(float* dst, std::size_t count, const std::string& where) {
    std::vector<unsigned char> buf(count * 4);
    read(reinterpret_cast<char*>(buf.data()), buf.size(), where);
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned char* b = buf.data() + 4 * i;
      const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                 (static_cast<std::uint32_t>(b[1]) << 8) |
                                 (static_cast<std::uint32_t>(b[2]) << 16) |
                                 (static_cast<std::uint32_t>(b[3]) << 24);
      dst[i] = std::bit_cast<float>(bits);
      if (!std::isfinite(dst[i])) {
        throw ValidationError("STRJ: non-finite value in " + where);
      }
    }
  }

 private:
  std::istream& in_;
};

}  // namespace detail

inline void write_header(std::ostream& out, const TrajectoryFileHeader& h) {
  out.write(TrajectoryFileHeader::kMagic.data(), 4);
  detail::put_le(out, h.version);
  detail::put_le(out, h.flags);
  detail::put_le(out, h.record_count);
  detail::put_le(out, h.hidden_dim);
  detail::put_le(out, h.semantic_dim);
}

inline TrajectoryFileHeader read_header(std::istream& in) {
  detail::ByteReader reader(in);
  std::array<char, 4> magic{};
  reader.read(magic.data(), magic.size(), "header");
  if (magic != TrajectoryFileHeader::kMagic) {
    throw ValidationError("STRJ: bad magic (expected \"STRJ\")");
  }
  TrajectoryFileHeader h;
  h.version = reader.get_le<std::uint16_t>("header");
  if (h.version != TrajectoryFileHeader::kVersion) {
    throw ValidationError("STRJ: unsupported version " +
                          std::to_string(h.version));
  }
  h.flags = reader.get_le<std::uint16_t>("header");
  h.record_count = reader.get_le<std::uint64_t>("header");
  h.hidden_dim = reader.get_le<std::uint32_t>("header");
  h.semantic_dim = reader.get_le<std::uint32_t>("header");
  if (h.has_semantic() != (h.semantic_dim > 0)) {
    throw ValidationError(
        "STRJ: semantic_dim must be > 0 exactly when flags bit1 is set");
  }
  if (h.record_count > 0 && h.hidden_dim == 0) {
    throw ValidationError("STRJ: hidden_dim is 0 but the file has records");
  }
  return h;
}

/// Writes `records` as an STRJ stream. Labels are emitted only when
/// `flags` has bit0, semantic vectors only when it has bit1.
inline std::size_t write_trajectories(std::span<const Trajectory> records,
                                      std::ostream& out, std::uint16_t flags) {
  TrajectoryFileHeader h;
  h.flags = flags;
  h.record_count = records.size();
  if (!records.empty()) {
    const auto dim = records.front().hidden_dim();
    if (dim == 0 || dim > UINT32_MAX) {
      throw ValidationError("STRJ: hidden dimension must be in [1, 2^32)");
    }
    h.hidden_dim = static_cast<std::uint32_t>(dim);
  }
  if (h.has_semantic()) {
    if (records.empty()) {
      throw ValidationError(
          "STRJ: semantic flag set but no records to define semantic_dim");
    }
    const auto& first = records.front().semantic;
    if (!first || first->empty()) {
      throw ValidationError("STRJ: record 0 has no semantic embedding");
    }
    h.semantic_dim = static_cast<std::uint32_t>(first->size());
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto where = " (record " + std::to_string(i) + ")";
    if (r.hidden_dim() != h.hidden_dim) {
      throw ValidationError("STRJ: inconsistent hidden dimension " +
                            std::to_string(r.hidden_dim()) + " vs " +
                            std::to_string(h.hidden_dim) + where);
    }
    if (r.id.size() > UINT16_MAX) {
      throw ValidationError("STRJ: id longer than 65535 bytes" + where);
    }
    if (r.length() > UINT32_MAX) {
      throw ValidationError("STRJ: too many rows" + where);
    }
    if (h.has_semantic() &&
        (!r.semantic || r.semantic->size() != h.semantic_dim)) {
      throw ValidationError("STRJ: inconsistent semantic dimension" + where);
    }
  }

  write_header(out, h);
  for (const auto& r : records) {
    detail::put_le(out, static_cast<std::uint16_t>(r.id.size()));
    out.write(r.id.data(), static_cast<std::streamsize>(r.id.size()));
    if (h.has_labels()) {
      detail::put_le(out, static_cast<std::uint8_t>(r.label));
    }
    detail::put_le(out, static_cast<std::uint32_t>(r.length()));
    const float* data = r.states.data();
    for (Eigen::Index k = 0; k < r.states.size(); ++k) {
      detail::put_f32(out, data[k]);
    }
    if (h.has_semantic()) {
      for (float v : *r.semantic) detail::put_f32(out, v);
    }
  }
  if (!out) throw ValidationError("STRJ: write failed");
  return records.size();
}

/// Reads the record following a header. `index` is used in error messages.
inline Trajectory read_record(std::istream& in, const TrajectoryFileHeader& h,
                              std::uint64_t index) {
  detail::ByteReader reader(in);
  const auto where = "record " + std::to_string(index);
  Trajectory r;
  const auto id_len = reader.get_le<std::uint16_t>(where);
  r.id.resize(id_len);
  if (id_len > 0) reader.read(r.id.data(), id_len, where);
  if (h.has_labels()) {
    const auto byte = reader.get_le<std::uint8_t>(where);
    if (byte != 0 && byte != 1 && byte != 255) {
      throw ValidationError("STRJ: invalid label byte " +
                            std::to_string(byte) + " in " + where);
    }
    r.label = static_cast<Label>(byte);
  }
  const auto rows = reader.get_le<std::uint32_t>(where);
  r.states.resize(rows, h.hidden_dim);
  reader.get_f32_block(r.states.data(),
                       static_cast<std::size_t>(rows) * h.hidden_dim, where);
  if (h.has_semantic()) {
    std::vector<float> s(h.semantic_dim);
    reader.get_f32_block(s.data(), s.size(), where);
    r.semantic = std::move(s);
  }
  return r;
}

inline std::vector<Trajectory> read_trajectories(std::istream& in) {
  const auto h = read_header(in);
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(h.record_count, 1u << 20)));
  for (std::uint64_t i = 0; i < h.record_count; ++i) {
    out.push_back(read_record(in, h, i));
  }
  return out;
}

inline std::vector<Trajectory> read_trajectories_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return read_trajectories(in);
}

inline TrajectoryFileHeader read_header_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return read_header(in);
}

inline std::size_t write_trajectories_file(std::span<const Trajectory> records,
                                           const std::string& path,
                                           std::uint16_t flags) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot create " + path);
  return write_trajectories(records, out, flags);
}

/// Keeps the first `cap` rows of an over-long trajectory. Shorter inputs are
/// returned unchanged; zero padding is never stored.
inline Trajectory normalize_length(Trajectory raw, std::size_t cap = kMaxTokens) {
  if (cap == 0) throw ValidationError("length cap must be positive");
  if (raw.length() < 2) {
    throw ValidationError("degenerate trajectory '" + raw.id + "': T=" +
                          std::to_string(raw.length()) + " (need T >= 2)");
  }
  if (raw.length() > cap) {
    StateMatrix head = raw.states.topRows(static_cast<Eigen::Index>(cap));
    raw.states = std::move(head);
  }
  return raw;
}

}  // namespace strconf
