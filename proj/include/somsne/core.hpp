#pragma once

// Primitives shared by both map algorithms: the observation-space response
// p(i|x), the visualization-space neighborhood q(i|x), winner selection,
// the mixture log-density and the information measures used to compare them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "somsne/matrix.hpp"

namespace somsne {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A map: n points in the 2D visualization space paired with n neuron
/// weights in the d-dimensional observation space. Immutable once built.
class MapModel {
 public:
  MapModel(Matrix points, Matrix weights) : z_(std::move(points)), w_(std::move(weights)) {
    if (z_.rows() == 0) throw InvalidArgument("map needs at least one neuron");
    if (z_.cols() != 2) throw DimensionMismatch("map points must be 2-dimensional");
    if (w_.rows() != z_.rows()) {
      throw DimensionMismatch("map has " + std::to_string(z_.rows()) + " points but " +
                              std::to_string(w_.rows()) + " weights");
    }
    if (w_.cols() == 0) throw DimensionMismatch("neuron weights must have dimension >= 1");
    if (!z_.all_finite() || !w_.all_finite()) throw InvalidArgument("map coordinates must be finite");
  }

  std::size_t n() const noexcept { return z_.rows(); }
  std::size_t dim() const noexcept { return w_.cols(); }

  const Matrix& points() const noexcept { return z_; }
  const Matrix& weights() const noexcept { return w_; }
  std::span<const double> point(std::size_t i) const { return z_.row(i); }
  std::span<const double> weight(std::size_t i) const { return w_.row(i); }

  friend bool operator==(const MapModel&, const MapModel&) = default;

 private:
  Matrix z_;
  Matrix w_;
};

/// Discrete distribution over the neurons of a map. Log-probabilities are kept
/// alongside the probabilities so divergences stay finite when an entry
/// underflows to zero; excluded entries carry a log-probability of -inf.
class CondDist {
 public:
  CondDist() = default;

  /// Validates nonnegativity and normalization (within 1e-9).
  static CondDist from_probs(std::vector<double> probs) {
    if (probs.empty()) throw InvalidArgument("distribution must be nonempty");
    double total = 0.0;
    for (double v : probs) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("probabilities must lie in [0,1]");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw InvalidArgument("probabilities sum to " + std::to_string(total) + ", expected 1");
    }
    CondDist d;
    d.log_probs_.resize(probs.size());
    std::transform(probs.begin(), probs.end(), d.log_probs_.begin(),
                   [](double v) { return v > 0.0 ? std::log(v) : -kInf; });
    d.probs_ = std::move(probs);
    return d;
  }

  /// Trusts the caller that the log-probabilities are normalized.
  static CondDist from_log_probs(std::vector<double> log_probs) {
    CondDist d;
    d.probs_.resize(log_probs.size());
    std::transform(log_probs.begin(), log_probs.end(), d.probs_.begin(),
                   [](double v) { return std::exp(v); });
    d.log_probs_ = std::move(log_probs);
    return d;
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  const std::vector<double>& log_probs() const noexcept { return log_probs_; }

 private:
  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

namespace detail {

/// Shifted logits -d_i * inv_scale - max; excluded entries are -inf.
/// Returns the log of the shifted partition function.
inline double shifted_logits(std::span<const double> sqdists, double inv_scale,
                             std::optional<std::size_t> excluded, std::vector<double>& out) {
  out.resize(sqdists.size());
  double best = -kInf;
  for (std::size_t i = 0; i < sqdists.size(); ++i) {
    if (std::isnan(sqdists[i])) throw InvalidArgument("squared distance is NaN");
    const double l = (excluded && *excluded == i) ? -kInf : -sqdists[i] * inv_scale;
    out[i] = l;
    best = std::max(best, l);
  }
  if (!std::isfinite(best)) throw InvalidArgument("no finite squared distance to normalize over");
  double z = 0.0;
  for (double& l : out) {
    l -= best;
    z += std::exp(l);
  }
  return std::log(z);
}

/// Perplexity (2^H) of the softmax of -sqdists * inv_scale, without allocating
/// a distribution.
inline double softmax_perplexity(std::span<const double> sqdists, double inv_scale,
                                 std::optional<std::size_t> excluded) {
  double best = -kInf;
  for (std::size_t i = 0; i < sqdists.size(); ++i) {
    if (excluded && *excluded == i) continue;
    best = std::max(best, -sqdists[i] * inv_scale);
  }
  double z = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < sqdists.size(); ++i) {
    if (excluded && *excluded == i) continue;
    const double l = -sqdists[i] * inv_scale - best;
    const double e = std::exp(l);
    z += e;
    weighted += e * l;
  }
  // H (nats) = ln Z - E[l]
  const double h_nats = std::log(z) - weighted / z;
  return std::exp(std::max(0.0, h_nats));
}

}  // namespace detail

/// probs_i proportional to exp(-sqdists_i * inv_scale), evaluated with
/// max-subtraction. The excluded index, if any, gets probability exactly 0.
inline CondDist softmax_neg_sqdist(std::span<const double> sqdists, double inv_scale,
                                   std::optional<std::size_t> excluded = std::nullopt) {
  if (sqdists.empty()) throw InvalidArgument("softmax over an empty set");
  if (!(inv_scale > 0.0) || !std::isfinite(inv_scale)) {
    throw InvalidArgument("inverse scale must be positive and finite");
  }
  if (excluded) {
    if (*excluded >= sqdists.size()) throw InvalidArgument("excluded index out of range");
    if (sqdists.size() < 2) throw InvalidArgument("cannot exclude the only entry");
  }
  std::vector<double> logits;
  const double log_z = detail::shifted_logits(sqdists, inv_scale, excluded, logits);
  for (double& l : logits) l -= log_z;
  return CondDist::from_log_probs(std::move(logits));
}

/// Index of the weight nearest to x (lowest index on ties).
inline std::size_t winner_from_sqdists(std::span<const double> sqdists) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sqdists.size(); ++i) {
    if (sqdists[i] < sqdists[best]) best = i;
  }
  return best;
}

inline std::size_t winner(const MapModel& map, std::span<const double> x) {
  return winner_from_sqdists(squared_distances(map.weights(), x));
}

/// p(i|x) with the self entry removed explicitly (standard SNE convention).
inline CondDist p_conditional_excluding(const MapModel& map, std::span<const double> x,
                                        double sigma, std::optional<std::size_t> excluded) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  const auto sq = squared_distances(map.weights(), x);
  return softmax_neg_sqdist(sq, 1.0 / (sigma * sigma), excluded);
}

/// p(i|x). With `exclude_winner_self`, a stimulus that coincides with its
/// winner's weight gets that entry zeroed.
inline CondDist p_conditional(const MapModel& map, std::span<const double> x, double sigma,
                              bool exclude_winner_self = false) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  const auto sq = squared_distances(map.weights(), x);
  std::optional<std::size_t> excluded;
  if (exclude_winner_self) {
    const std::size_t j = winner_from_sqdists(sq);
    if (sq[j] == 0.0) excluded = j;
  }
  return softmax_neg_sqdist(sq, 1.0 / (sigma * sigma), excluded);
}

/// q(i|x): Gaussian neighborhood of the winner's point, with the points
/// divided by `scale` (scale 1 is the unscaled neighborhood).
inline CondDist q_conditional(const MapModel& map, std::size_t winner_idx, double scale,
                              std::optional<std::size_t> excluded = std::nullopt) {
  if (winner_idx >= map.n()) throw InvalidArgument("winner index out of range");
  if (!(scale > 0.0)) throw InvalidArgument("scale must be positive");
  const auto sq = squared_distances(map.points(), map.point(winner_idx));
  return softmax_neg_sqdist(sq, 1.0 / (scale * scale), excluded);
}

namespace detail {

/// ln p(x) for the uniform mixture of isotropic Gaussians whose exponent is
/// -||x - w_i||^2 / sigma^2, i.e. density (pi sigma^2)^(-d/2) exp(-.).
inline double log_density_from_sqdists(std::span<const double> sqdists, double sigma,
                                       std::size_t dim,
                                       std::optional<std::size_t> excluded = std::nullopt) {
  const double inv = 1.0 / (sigma * sigma);
  double best = -kInf;
  for (std::size_t i = 0; i < sqdists.size(); ++i) {
    if (excluded != i) best = std::max(best, -sqdists[i] * inv);
  }
  double z = 0.0;
  for (std::size_t i = 0; i < sqdists.size(); ++i) {
    if (excluded != i) z += std::exp(-sqdists[i] * inv - best);
  }
  const double n = static_cast<double>(sqdists.size() - (excluded ? 1 : 0));
  return best + std::log(z) - std::log(n) -
         0.5 * static_cast<double>(dim) * std::log(std::numbers::pi * sigma * sigma);
}

}  // namespace detail

inline double log_density(const MapModel& map, std::span<const double> x, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  return detail::log_density_from_sqdists(squared_distances(map.weights(), x), sigma, map.dim());
}

inline double entropy_bits(const CondDist& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = p[i];
    if (v > 0.0) h -= v * p.log_probs()[i];
  }
  return std::max(0.0, h / std::numbers::ln2);
}

inline double perplexity(const CondDist& p) {
  const double perp = std::exp2(entropy_bits(p));
  return std::clamp(perp, 1.0, static_cast<double>(p.size()));
}

/// D_KL(a || b) in nats. Returns +inf when a puts mass where b has none.
inline double kl_divergence(const CondDist& a, const CondDist& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("KL divergence over distributions of sizes " + std::to_string(a.size()) +
                            " and " + std::to_string(b.size()));
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (!(ai > 0.0)) continue;
    const double lb = b.log_probs()[i];
    if (lb == -kInf) return kInf;
    kl += ai * (a.log_probs()[i] - lb);
  }
  return std::max(0.0, kl);
}

}  // namespace somsne
