#pragma once

// Dataset generation and ingestion: two-moons generator, CSV and IDX readers,
// CSV writer and seeded subsampling.

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "somsne/dataset.hpp"

namespace somsne {

class FormatError : public Error {
 public:
  enum class Kind { io, empty, ragged, non_numeric, bad_magic, truncated, count_mismatch };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Two interleaved half circles: label 0 on (cos t, sin t), label 1 on
/// (1 - cos t, 0.5 - sin t), t on a uniform grid over [0, pi], plus
/// Gaussian noise. The first floor(n/2) points form moon 0.
inline Dataset gen_moons(std::size_t n_points, double noise_std, std::uint64_t seed) {
  if (n_points < 2) throw InvalidArgument("moons need at least 2 points");
  if (!(noise_std >= 0.0)) throw InvalidArgument("noise_std must be nonnegative");
  const std::size_t n_out = n_points / 2;
  const std::size_t n_in = n_points - n_out;
  auto grid = [](std::size_t count, std::size_t i) {
    return count == 1 ? 0.0
                      : std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  Matrix x(n_points, 2);
  std::vector<int> labels(n_points);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = grid(n_out, i);
    x(i, 0) = std::cos(t);
    x(i, 1) = std::sin(t);
    labels[i] = 0;
  }
  for (std::size_t i = 0; i < n_in; ++i) {
    const double t = grid(n_in, i);
    x(n_out + i, 0) = 1.0 - std::cos(t);
    x(n_out + i, 1) = 0.5 - std::sin(t);
    labels[n_out + i] = 1;
  }
  if (noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : x.data()) v += noise_std * gauss(rng);
  }
  return Dataset(std::move(x), std::move(labels));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

template <typename T>
T parse_cell(std::string_view cell, std::size_t line_no, std::size_t col) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw FormatError(FormatError::Kind::non_numeric,
                      "line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                          ": not a number: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace detail

/// Comma-separated floats, one stimulus per line. With `has_labels` the last
/// column is an integer label. Blank lines are ignored.
inline Dataset parse_csv(std::istream& in, bool has_labels, bool skip_header = false) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (rows == 0) {
      width = cells.size();
      if (has_labels && width < 2) {
        throw FormatError(FormatError::Kind::ragged,
                          "line " + std::to_string(line_no) +
                              ": need at least one feature column before the label");
      }
    } else if (cells.size() != width) {
      throw FormatError(FormatError::Kind::ragged, "line " + std::to_string(line_no) +
                                                       ": expected " + std::to_string(width) +
                                                       " columns, got " +
                                                       std::to_string(cells.size()));
    }
    const std::size_t n_feat = has_labels ? width - 1 : width;
    for (std::size_t c = 0; c < n_feat; ++c) {
      const double v = detail::parse_cell<double>(cells[c], line_no, c + 1);
      if (!std::isfinite(v)) {
        throw FormatError(FormatError::Kind::non_numeric,
                          "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                              ": value is not finite");
      }
      values.push_back(v);
    }
    if (has_labels) labels.push_back(detail::parse_cell<int>(cells[n_feat], line_no, width));
    ++rows;
  }
  if (rows == 0) throw FormatError(FormatError::Kind::empty, "no data rows");
  const std::size_t n_feat = has_labels ? width - 1 : width;
  Matrix x(rows, n_feat, std::move(values));
  if (has_labels) return Dataset(std::move(x), std::move(labels));
  return Dataset(std::move(x));
}

inline Dataset load_csv(const std::string& path, bool has_labels, bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open '" + path + "'");
  try {
    return parse_csv(in, has_labels, skip_header);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path + ": " + e.what());
  }
}

/// 17 significant digits, so a write/read round trip is exact.
inline void write_csv(std::ostream& os, const Matrix& x,
                      const std::optional<std::vector<int>>& labels = std::nullopt) {
  char buf[32];
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (j > 0) os << ',';
      std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
      os << buf;
    }
    if (labels) os << ',' << (*labels)[i];
    os << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(FormatError::Kind::io, "cannot write '" + path + "'");
  write_csv(out, data.x, data.labels);
  if (!out) throw FormatError(FormatError::Kind::io, "write failed for '" + path + "'");
}

namespace detail {

/// Whole file contents, gunzipped when the gzip magic is present.
inline std::vector<unsigned char> read_maybe_gzip(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw FormatError(FormatError::Kind::io, "cannot open '" + path + "'");
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int got;
  while ((got = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + got);
  int errnum = 0;
  const char* msg = gzerror(f, &errnum);
  const std::string err = (got < 0 || (errnum != Z_OK && errnum != Z_BUF_ERROR)) ? msg : "";
  gzclose(f);
  if (got < 0) throw FormatError(FormatError::Kind::truncated, path + ": " + err);
  return out;
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace detail

/// True when the file (possibly gzipped) starts with the IDX image magic.
inline bool looks_like_idx_images(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) return false;
  unsigned char head[4] = {};
  const int got = gzread(f, head, 4);
  gzclose(f);
  return got == 4 && head[0] == 0 && head[1] == 0 && head[2] == 0x08 && head[3] == 0x03;
}

/// IDX unsigned-byte tensors: images (magic 0x803, N x rows x cols) flattened
/// row-major, optional labels (magic 0x801, N). Gzip input is detected by
/// its magic bytes.
inline Dataset load_idx(const std::string& images_path,
                        const std::optional<std::string>& labels_path = std::nullopt,
                        bool normalize = true) {
  const auto img = detail::read_maybe_gzip(images_path);
  if (img.size() < 16) {
    throw FormatError(FormatError::Kind::truncated, images_path + ": header shorter than 16 bytes");
  }
  const std::uint32_t magic = detail::read_be32(img, 0);
  if (magic != detail::kIdxImagesMagic) {
    throw FormatError(FormatError::Kind::bad_magic,
                      images_path + ": bad magic " + detail::hex32(magic) + ", expected " +
                          detail::hex32(detail::kIdxImagesMagic) + " (images)");
  }
  const std::size_t count = detail::read_be32(img, 4);
  const std::size_t rows = detail::read_be32(img, 8);
  const std::size_t cols = detail::read_be32(img, 12);
  const std::size_t dim = rows * cols;
  if (img.size() - 16 < count * dim) {
    throw FormatError(FormatError::Kind::truncated,
                      images_path + ": payload has " + std::to_string(img.size() - 16) +
                          " bytes, header promises " + std::to_string(count * dim));
  }
  Matrix x(count, dim);
  const double div = normalize ? 255.0 : 1.0;
  for (std::size_t k = 0; k < count * dim; ++k) x.data()[k] = static_cast<double>(img[16 + k]) / div;

  if (!labels_path) return Dataset(std::move(x));

  const auto lab = detail::read_maybe_gzip(*labels_path);
  if (lab.size() < 8) {
    throw FormatError(FormatError::Kind::truncated, *labels_path + ": header shorter than 8 bytes");
  }
  const std::uint32_t lmagic = detail::read_be32(lab, 0);
  if (lmagic != detail::kIdxLabelsMagic) {
    throw FormatError(FormatError::Kind::bad_magic,
                      *labels_path + ": bad magic " + detail::hex32(lmagic) + ", expected " +
                          detail::hex32(detail::kIdxLabelsMagic) + " (labels)");
  }
  const std::size_t lcount = detail::read_be32(lab, 4);
  if (lcount != count) {
    throw FormatError(FormatError::Kind::count_mismatch,
                      *labels_path + ": " + std::to_string(lcount) + " labels for " +
                          std::to_string(count) + " images");
  }
  if (lab.size() - 8 < lcount) {
    throw FormatError(FormatError::Kind::truncated, *labels_path + ": label payload truncated");
  }
  std::vector<int> labels(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(lcount));
  return Dataset(std::move(x), std::move(labels));
}

/// k rows drawn uniformly without replacement, kept in their original order.
inline Dataset subsample(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw InvalidArgument("subsample size must be positive");
  if (k > data.m()) {
    throw InvalidArgument("cannot draw " + std::to_string(k) + " rows from " +
                          std::to_string(data.m()));
  }
  std::vector<std::size_t> all(data.m());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), k, rng);
  Matrix x(k, data.dim());
  std::optional<std::vector<int>> labels;
  if (data.labels) labels.emplace(k);
  for (std::size_t r = 0; r < k; ++r) {
    const auto src = data.stimulus(chosen[r]);
    std::copy(src.begin(), src.end(), x.row(r).begin());
    if (labels) (*labels)[r] = (*data.labels)[chosen[r]];
  }
  return Dataset(std::move(x), std::move(labels));
}

}  // namespace somsne
