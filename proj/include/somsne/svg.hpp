#pragma once

// Static SVG scatter of a map, in the visualization space (points z) or, for
// 2D data, the observation space (weights w). Optional lattice edges.

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "somsne/core.hpp"
#include "somsne/dataset.hpp"
#include "somsne/som.hpp"

namespace somsne {

enum class PlotSpace { visualization, observation };

struct SvgOptions {
  PlotSpace space = PlotSpace::visualization;
  std::optional<GridSpec> edges;
  /// One label per neuron; -1 (or absent) draws gray.
  std::optional<std::vector<int>> neuron_labels;
  double size_px = 600.0;
  double radius_px = 4.0;
};

inline constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

/// Majority label among the stimuli each neuron wins (ties to the smaller
/// label); -1 for neurons that win nothing.
inline std::vector<int> neuron_labels_from_data(const MapModel& map, const Dataset& data) {
  if (!data.labels) throw InvalidArgument("dataset has no labels");
  if (data.dim() != map.dim()) throw DimensionMismatch("dataset and map dimensions differ");
  std::vector<std::map<int, std::size_t>> votes(map.n());
  for (std::size_t s = 0; s < data.m(); ++s) {
    ++votes[winner(map, data.stimulus(s))][(*data.labels)[s]];
  }
  std::vector<int> out(map.n(), -1);
  for (std::size_t i = 0; i < map.n(); ++i) {
    std::size_t best = 0;
    for (const auto& [label, count] : votes[i]) {
      if (count > best) {
        best = count;
        out[i] = label;
      }
    }
  }
  return out;
}

inline std::string render_svg(const MapModel& map, const SvgOptions& opt = {}) {
  if (opt.space == PlotSpace::observation && map.dim() != 2) {
    throw DimensionMismatch("observation-space plot needs 2D weights, map has dimension " +
                            std::to_string(map.dim()));
  }
  if (opt.edges && opt.edges->size() != map.n()) {
    throw InvalidArgument("edge grid " + std::to_string(opt.edges->rows) + "x" +
                          std::to_string(opt.edges->cols) + " does not match " +
                          std::to_string(map.n()) + " neurons");
  }
  if (opt.neuron_labels && opt.neuron_labels->size() != map.n()) {
    throw InvalidArgument("need one label per neuron");
  }
  const Matrix& pts = opt.space == PlotSpace::visualization ? map.points() : map.weights();

  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    xmin = std::min(xmin, pts(i, 0));
    xmax = std::max(xmax, pts(i, 0));
    ymin = std::min(ymin, pts(i, 1));
    ymax = std::max(ymax, pts(i, 1));
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  const double margin = 4.0 * opt.radius_px;
  const double usable = opt.size_px - 2.0 * margin;
  auto px = [&](std::size_t i) {
    return std::array<double, 2>{margin + (pts(i, 0) - xmin) / span * usable,
                                 opt.size_px - margin - (pts(i, 1) - ymin) / span * usable};
  };

  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"%.0f\" "
                "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n"
                "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                opt.size_px, opt.size_px, opt.size_px, opt.size_px);
  out += buf;

  if (opt.edges) {
    out += "<g stroke=\"#999999\" stroke-width=\"1\">\n";
    auto line = [&](std::size_t a, std::size_t b) {
      const auto pa = px(a), pb = px(b);
      std::snprintf(buf, sizeof buf, "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\"/>\n",
                    pa[0], pa[1], pb[0], pb[1]);
      out += buf;
    };
    const std::size_t rows = opt.edges->rows, cols = opt.edges->cols;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        if (c + 1 < cols) line(i, i + 1);
        if (r + 1 < rows) line(i, i + cols);
      }
    }
    out += "</g>\n";
  }

  out += "<g stroke=\"none\">\n";
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    const auto p = px(i);
    const int label = opt.neuron_labels ? (*opt.neuron_labels)[i] : 0;
    const char* color =
        label < 0 ? "#c0c0c0" : kPalette[static_cast<std::size_t>(label) % kPalette.size()];
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.1f\" fill=\"%s\"/>\n",
                  p[0], p[1], opt.radius_px, color);
    out += buf;
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace somsne
