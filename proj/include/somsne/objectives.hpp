#pragma once

// Per-stimulus objectives of the two map algorithms. Both share the
// data-fitting term -ln p(x) and differ only in the direction of the KL
// divergence between q(.|x) and p(.|x):
//   J_som = KL(q || p) - ln p(x)      (optimized over neuron weights)
//   J_sne = KL(p || q) - ln p(x)      (optimized over 2D points)

#include <optional>
#include <span>
#include <vector>

#include "somsne/core.hpp"
#include "somsne/dataset.hpp"

namespace somsne {

struct ObjectiveBreakdown {
  double kl_qp = 0.0;
  double kl_pq = 0.0;
  double neg_log_px = 0.0;
  double j_som = 0.0;
  double j_sne = 0.0;
};

namespace detail {

/// `excluded` drops one neuron from p, q and the mixture density.
inline ObjectiveBreakdown objective_from_sqdists(
    std::span<const double> sq_w, std::span<const double> sq_z, double sigma, double scale,
    std::size_t dim, std::optional<std::size_t> excluded = std::nullopt) {
  const CondDist p = softmax_neg_sqdist(sq_w, 1.0 / (sigma * sigma), excluded);
  const CondDist q = softmax_neg_sqdist(sq_z, 1.0 / (scale * scale), excluded);
  ObjectiveBreakdown out;
  out.kl_qp = kl_divergence(q, p);
  out.kl_pq = kl_divergence(p, q);
  out.neg_log_px = -log_density_from_sqdists(sq_w, sigma, dim, excluded);
  out.j_som = out.kl_qp + out.neg_log_px;
  out.j_sne = out.kl_pq + out.neg_log_px;
  return out;
}

inline void check_positive(double v, const char* name) {
  if (!(v > 0.0)) throw InvalidArgument(std::string(name) + " must be positive");
}

}  // namespace detail

inline ObjectiveBreakdown objective_at(const MapModel& map, std::span<const double> x,
                                       double sigma, double scale) {
  detail::check_positive(sigma, "sigma");
  detail::check_positive(scale, "scale");
  const auto sq_w = squared_distances(map.weights(), x);
  const std::size_t win = winner_from_sqdists(sq_w);
  const auto sq_z = squared_distances(map.points(), map.point(win));
  return detail::objective_from_sqdists(sq_w, sq_z, sigma, scale, map.dim());
}

/// Negative gradient of J_som with respect to every neuron weight, holding the
/// winner fixed: (2 / sigma^2) * q(i|x) * (x - w_i). Rows are neurons.
inline Matrix som_update_direction(const MapModel& map, std::span<const double> x, double sigma,
                                   double scale) {
  detail::check_positive(sigma, "sigma");
  detail::check_positive(scale, "scale");
  const auto sq_w = squared_distances(map.weights(), x);
  const CondDist q = q_conditional(map, winner_from_sqdists(sq_w), scale);
  const double factor = 2.0 / (sigma * sigma);
  Matrix out(map.n(), map.dim());
  for (std::size_t i = 0; i < map.n(); ++i) {
    const auto w = map.weight(i);
    auto row = out.row(i);
    for (std::size_t k = 0; k < map.dim(); ++k) row[k] = factor * q[i] * (x[k] - w[k]);
  }
  return out;
}

namespace detail {

/// Adds coeff * 2 / scale^2 * (z_win - z_i)(p_i - q_i) into `acc` (n x 2).
inline void accumulate_sne_direction(const Matrix& points, const CondDist& p, const CondDist& q,
                                     std::size_t winner_idx, double scale, double coeff,
                                     Matrix& acc) {
  const double factor = coeff * 2.0 / (scale * scale);
  const auto zw = points.row(winner_idx);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (i == winner_idx) continue;
    const double g = factor * (p[i] - q[i]);
    if (g == 0.0) continue;
    const auto zi = points.row(i);
    acc(i, 0) += g * (zw[0] - zi[0]);
    acc(i, 1) += g * (zw[1] - zi[1]);
  }
}

}  // namespace detail

/// Negative gradient of J_sne with respect to the 2D points for a fixed p and
/// winner: (2 / scale^2) * (z_win - z_i) * (p(i|x) - q(i|x)). A point whose
/// neuron responds more than its neighborhood share (p > q) is pulled toward
/// the winner, an over-represented one (q > p) is pushed away. The winner's
/// own row is zero. `excluded` removes an index from q (standard SNE
/// self-exclusion).
inline Matrix sne_update_direction(const MapModel& map, const CondDist& p, std::size_t winner_idx,
                                   double scale,
                                   std::optional<std::size_t> excluded = std::nullopt) {
  if (winner_idx >= map.n()) throw InvalidArgument("winner index out of range");
  if (p.size() != map.n()) throw DimensionMismatch("p must cover every neuron of the map");
  detail::check_positive(scale, "scale");
  const CondDist q = q_conditional(map, winner_idx, scale, excluded);
  Matrix out(map.n(), 2);
  detail::accumulate_sne_direction(map.points(), p, q, winner_idx, scale, 1.0, out);
  return out;
}

/// Mean of objective_at over the dataset, summed in dataset order.
inline ObjectiveBreakdown dataset_objective(const MapModel& map, const Dataset& data, double sigma,
                                            double scale) {
  if (data.empty()) throw InvalidArgument("dataset is empty");
  if (data.dim() != map.dim()) throw DimensionMismatch("dataset and map dimensions differ");
  ObjectiveBreakdown sum;
  for (std::size_t s = 0; s < data.m(); ++s) {
    const auto b = objective_at(map, data.stimulus(s), sigma, scale);
    sum.kl_qp += b.kl_qp;
    sum.kl_pq += b.kl_pq;
    sum.neg_log_px += b.neg_log_px;
  }
  const double m = static_cast<double>(data.m());
  ObjectiveBreakdown mean;
  mean.kl_qp = sum.kl_qp / m;
  mean.kl_pq = sum.kl_pq / m;
  mean.neg_log_px = sum.neg_log_px / m;
  mean.j_som = mean.kl_qp + mean.neg_log_px;
  mean.j_sne = mean.kl_pq + mean.neg_log_px;
  return mean;
}

}  // namespace somsne
