#pragma once

// Glue shared by the command-line tool and by code that wants to reproduce
// its outputs exactly: dataset loading options and provenance records.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "somsne/data.hpp"
#include "somsne/map_file.hpp"
#include "somsne/sne.hpp"
#include "somsne/som.hpp"

namespace somsne {

struct DataSource {
  std::string path;
  /// CSV: last column holds integer labels.
  bool labels = false;
  bool skip_header = false;
  /// IDX: optional labels file.
  std::optional<std::string> idx_labels;
  /// IDX: keep raw 0..255 pixel values.
  bool raw = false;
  std::optional<std::size_t> subsample;
  std::uint64_t subsample_seed = 0;
};

/// IDX image files are recognized by their magic; anything else is CSV.
inline Dataset load_dataset(const DataSource& src) {
  Dataset data = looks_like_idx_images(src.path) ? load_idx(src.path, src.idx_labels, !src.raw)
                                                  : load_csv(src.path, src.labels, src.skip_header);
  if (src.subsample) data = subsample(data, *src.subsample, src.subsample_seed);
  return data;
}

inline std::optional<GridSpec> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos || x == 0 || x + 1 == text.size()) return std::nullopt;
  try {
    std::size_t used_r = 0, used_c = 0;
    const long r = std::stol(text.substr(0, x), &used_r);
    const long c = std::stol(text.substr(x + 1), &used_c);
    if (used_r != x || used_c != text.size() - x - 1 || r <= 0 || c <= 0) return std::nullopt;
    return GridSpec{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline nlohmann::json som_provenance(const Dataset& data, const GridSpec& grid,
                                     const ScheduleParams& sched, std::uint64_t seed) {
  return {{"algorithm", "som"},
          {"grid", {grid.rows, grid.cols}},
          {"sigma_i", sched.sigma_i},
          {"sigma_f", sched.sigma_f},
          {"lambda_i", sched.lambda_i},
          {"lambda_f", sched.lambda_f},
          {"t_max", sched.t_max},
          {"seed", seed},
          {"data_fingerprint", fingerprint(data.x)},
          {"data_rows", data.m()}};
}

inline nlohmann::json sne_provenance(const Dataset& data, const Matrix& weights,
                                     const SneConfig& cfg) {
  return {{"algorithm", "sne"},
          {"mode", cfg.mode == SneMode::standard ? "standard" : "general"},
          {"perplexity", cfg.perplexity},
          {"iters", cfg.iters},
          {"learning_rate", cfg.learning_rate},
          {"momentum", cfg.momentum},
          {"init_std", cfg.init_std},
          {"seed", cfg.seed},
          {"weights_fingerprint", fingerprint(weights)},
          {"data_fingerprint", fingerprint(data.x)},
          {"data_rows", data.m()}};
}

/// The map was trained in standard SNE mode (one neuron per stimulus).
inline bool is_standard_sne(const nlohmann::json& provenance) {
  return provenance.is_object() && provenance.value("algorithm", "") == "sne" &&
         provenance.value("mode", "") == "standard";
}

}  // namespace somsne
