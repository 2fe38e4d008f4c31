#pragma once

#include <optional>
#include <string>
#include <vector>

#include "somsne/matrix.hpp"

namespace somsne {

/// M stimuli in d dimensions. Labels only ever feed visualization; trainers
/// take `x` alone.
struct Dataset {
  Matrix x;
  std::optional<std::vector<int>> labels;

  Dataset() = default;
  explicit Dataset(Matrix stimuli, std::optional<std::vector<int>> lbls = std::nullopt)
      : x(std::move(stimuli)), labels(std::move(lbls)) {
    if (labels && labels->size() != x.rows()) {
      throw DimensionMismatch("dataset has " + std::to_string(x.rows()) + " rows but " +
                              std::to_string(labels->size()) + " labels");
    }
  }

  std::size_t m() const noexcept { return x.rows(); }
  std::size_t dim() const noexcept { return x.cols(); }
  bool empty() const noexcept { return x.rows() == 0; }
  std::span<const double> stimulus(std::size_t i) const { return x.row(i); }
};

}  // namespace somsne
