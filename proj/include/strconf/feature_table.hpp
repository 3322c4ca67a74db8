#pragma once

// Feature CSV: header `id,label,<col>...`, one row per instance. Structural
// columns are f0..f69, semantic columns s0.., PCA-projected columns p0...
// Labels are 0, 1 or empty (unknown).

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "strconf/descriptors.hpp"
#include "strconf/error.hpp"
#include "strconf/gbdt.hpp"

namespace strconf {

struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<std::string> ids;
  std::vector<std::optional<int>> labels;
  FeatureMatrix values;  // rows x columns

  std::size_t rows() const { return ids.size(); }

  /// Labels as 0/1; throws if any row is unlabeled.
  std::vector<int> require_labels(std::string_view what) const {
    std::vector<int> out;
    out.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!labels[i]) {
        throw ValidationError(std::string(what) + ": row '" + ids[i] + "' has no label");
      }
      out.push_back(*labels[i]);
    }
    return out;
  }
};

enum class Variant {
  struct_only,
  semantic_only,
  struct_plus_sent,
  fft_only,
  lap_only,
  local_only,
  shape_only,
};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::struct_only: return "struct_only";
    case Variant::semantic_only: return "semantic_only";
    case Variant::struct_plus_sent: return "struct_plus_sent";
    case Variant::fft_only: return "fft_only";
    case Variant::lap_only: return "lap_only";
    case Variant::local_only: return "local_only";
    case Variant::shape_only: return "shape_only";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  for (auto v : {Variant::struct_only, Variant::semantic_only, Variant::struct_plus_sent,
                 Variant::fft_only, Variant::lap_only, Variant::local_only, Variant::shape_only}) {
    if (s == to_string(v)) return v;
  }
  if (s == "sent_only") return Variant::semantic_only;
  if (s == "geo_only") return Variant::local_only;
  throw ValidationError("unknown variant '" + std::string(s) + "'");
}

inline bool needs_semantic(Variant v) {
  return v == Variant::semantic_only || v == Variant::struct_plus_sent;
}

namespace detail {

inline std::optional<std::size_t> column_number(std::string_view name, char prefix) {
  if (name.size() < 2 || name[0] != prefix) return std::nullopt;
  std::size_t value = 0;
  const auto* end = name.data() + name.size();
  const auto [ptr, ec] = std::from_chars(name.data() + 1, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

inline void append_double(std::string& out, double v, int precision) {
  char buf[64];
  const auto res = precision > 0
                       ? std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision)
                       : std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError("csv line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Column indices of `table` used by `variant`. A table of PCA projections
/// (p-columns) serves the struct_only variant.
inline std::vector<std::size_t> variant_columns(const FeatureTable& table, Variant variant) {
  std::vector<std::size_t> f, s, p;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (detail::column_number(table.columns[c], 'f')) f.push_back(c);
    else if (detail::column_number(table.columns[c], 's')) s.push_back(c);
    else if (detail::column_number(table.columns[c], 'p')) p.push_back(c);
  }
  auto family = [&](std::size_t lo, std::size_t count) {
    std::vector<std::size_t> out;
    for (std::size_t c : f) {
      const auto k = *detail::column_number(table.columns[c], 'f');
      if (k >= lo && k < lo + count) out.push_back(c);
    }
    if (out.size() != count) {
      throw ValidationError("variant '" + std::string(to_string(variant)) +
                            "' needs structural columns f" + std::to_string(lo) + "..f" +
                            std::to_string(lo + count - 1));
    }
    return out;
  };
  auto need_semantic = [&] {
    if (s.empty()) {
      throw ValidationError("variant '" + std::string(to_string(variant)) +
                            "' needs semantic columns s0.. (STRJ flags bit1)");
    }
  };
  switch (variant) {
    case Variant::struct_only:
      if (!f.empty()) return family(0, kDescriptorSize);
      if (!p.empty()) return p;
      throw ValidationError("variant 'struct_only' needs f- or p-columns");
    case Variant::fft_only: return family(kFftOffset, kFftFeatures);
    case Variant::lap_only: return family(kLaplacianOffset, kLaplacianEigenvalues);
    case Variant::local_only: return family(kLocalOffset, kLocalFeatures);
    case Variant::shape_only: return family(kShapeOffset, kShapeFeatures);
    case Variant::semantic_only: need_semantic(); return s;
    case Variant::struct_plus_sent: {
      need_semantic();
      auto out = family(0, kDescriptorSize);
      out.insert(out.end(), s.begin(), s.end());
      return out;
    }
  }
  return {};
}

/// `precision` significant digits; 0 selects shortest round-trip output.
inline void write_feature_csv(std::ostream& out, const FeatureTable& table, int precision = 9) {
  std::string line = "id,label";
  for (const auto& c : table.columns) {
    line += ',';
    line += c;
  }
  out << line << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    line = table.ids[r];
    line += ',';
    if (table.labels[r]) line += std::to_string(*table.labels[r]);
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      line += ',';
      detail::append_double(line, table.values(static_cast<Eigen::Index>(r), c), precision);
    }
    out << line << '\n';
  }
  if (!out) throw ValidationError("feature csv: write failed");
}

inline FeatureTable read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("feature csv: empty file");
  const auto header = detail::split_csv_line(detail::strip_cr(line));
  if (header.size() < 2 || header[0] != "id" || header[1] != "label") {
    throw ValidationError("feature csv: header must start with id,label");
  }
  FeatureTable t;
  for (std::size_t c = 2; c < header.size(); ++c) t.columns.emplace_back(header[c]);
  const std::size_t width = t.columns.size();

  std::vector<double> flat;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_cr(line);
    if (body.empty()) continue;
    const auto cells = detail::split_csv_line(body);
    if (cells.size() != width + 2) {
      throw ValidationError("feature csv line " + std::to_string(line_no) + ": expected " +
                            std::to_string(width + 2) + " fields, got " + std::to_string(cells.size()));
    }
    t.ids.emplace_back(cells[0]);
    if (cells[1].empty()) {
      t.labels.emplace_back(std::nullopt);
    } else if (cells[1] == "0" || cells[1] == "1") {
      t.labels.emplace_back(cells[1] == "1" ? 1 : 0);
    } else {
      throw ValidationError("feature csv line " + std::to_string(line_no) + ": label must be 0, 1 or empty");
    }
    for (std::size_t c = 0; c < width; ++c) flat.push_back(detail::parse_double(cells[c + 2], line_no));
  }
  t.values = Eigen::Map<FeatureMatrix>(flat.data(), static_cast<Eigen::Index>(t.ids.size()),
                                       static_cast<Eigen::Index>(width));
  return t;
}

inline FeatureTable read_feature_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return read_feature_csv(in);
}

inline void write_feature_csv_file(const FeatureTable& table, const std::string& path, int precision = 9) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot create " + path);
  write_feature_csv(out, table, precision);
}

/// Selects `columns` of `table` into a dense matrix.
inline FeatureMatrix select_columns(const FeatureTable& table, const std::vector<std::size_t>& columns) {
  FeatureMatrix out(table.values.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = table.values.col(static_cast<Eigen::Index>(columns[j]));
  }
  return out;
}

}  // namespace strconf
