#pragma once

// Perplexity calibration and map-quality curves.
//
// For each stimulus the observation-space width sigma_x and the
// visualization-space scale s_x are set so that p(.|x) and q(.|x) both have
// the requested perplexity; the objectives are then evaluated at that
// operating point and averaged over the data.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "somsne/core.hpp"
#include "somsne/dataset.hpp"
#include "somsne/objectives.hpp"

namespace somsne {

class CalibrationError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDefaultPerplexityTol = 1e-4;

/// Width w such that the softmax of -sqdists / w^2 has perplexity `target`.
/// Brackets by doubling/halving from w = 1 (up to 2^+-60), then bisects on
/// log w for at most 128 steps.
inline double calibrate_width(std::span<const double> sqdists, double target,
                              double tol = kDefaultPerplexityTol,
                              std::optional<std::size_t> excluded = std::nullopt) {
  const std::size_t n_eff = sqdists.size() - (excluded ? 1 : 0);
  if (excluded && *excluded >= sqdists.size()) throw InvalidArgument("excluded index out of range");
  if (!(target > 1.0) || target > static_cast<double>(n_eff)) {
    throw InvalidArgument("target perplexity " + std::to_string(target) + " outside (1, " +
                          std::to_string(n_eff) + "]");
  }
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");

  // perplexity is nondecreasing in the width
  auto perp_at = [&](double log2_width) {
    const double width = std::exp2(log2_width);
    return detail::softmax_perplexity(sqdists, 1.0 / (width * width), excluded);
  };

  constexpr double kMaxExponent = 60.0;
  double lo = 0.0, hi = 0.0;
  double p_lo = perp_at(0.0);
  if (std::abs(p_lo - target) <= tol) return 1.0;
  double p_hi = p_lo;
  if (p_lo < target) {
    while (p_hi < target) {
      lo = hi;
      p_lo = p_hi;
      hi += 1.0;
      if (hi > kMaxExponent) {
        throw CalibrationError("perplexity " + std::to_string(target) +
                               " unreachable: maximum attainable is " + std::to_string(p_hi));
      }
      p_hi = perp_at(hi);
      if (p_hi < p_lo - 1e-9) throw CalibrationError("perplexity not monotone in width");
    }
  } else {
    while (p_lo > target) {
      hi = lo;
      p_hi = p_lo;
      lo -= 1.0;
      if (lo < -kMaxExponent) {
        throw CalibrationError("perplexity " + std::to_string(target) +
                               " unreachable: minimum attainable is " + std::to_string(p_lo));
      }
      p_lo = perp_at(lo);
      if (p_lo > p_hi + 1e-9) throw CalibrationError("perplexity not monotone in width");
    }
  }
  if (std::abs(p_lo - target) <= tol) return std::exp2(lo);
  if (std::abs(p_hi - target) <= tol) return std::exp2(hi);

  for (int it = 0; it < 128; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p_mid = perp_at(mid);
    if (p_mid < p_lo - 1e-9 || p_mid > p_hi + 1e-9) {
      throw CalibrationError("perplexity not monotone in width");
    }
    if (std::abs(p_mid - target) <= tol) return std::exp2(mid);
    if (p_mid < target) {
      lo = mid;
      p_lo = p_mid;
    } else {
      hi = mid;
      p_hi = p_mid;
    }
  }
  throw CalibrationError("bisection did not reach perplexity " + std::to_string(target) +
                         " within " + std::to_string(tol));
}

/// sigma such that 2^H(p(.|x)) == target.
inline double calibrate_sigma(const MapModel& map, std::span<const double> x, double target,
                              double tol = kDefaultPerplexityTol,
                              std::optional<std::size_t> excluded = std::nullopt) {
  return calibrate_width(squared_distances(map.weights(), x), target, tol, excluded);
}

/// Point scale such that 2^H(q(.|x)) == target for the given winner.
inline double calibrate_scale(const MapModel& map, std::size_t winner_idx, double target,
                              double tol = kDefaultPerplexityTol,
                              std::optional<std::size_t> excluded = std::nullopt) {
  if (winner_idx >= map.n()) throw InvalidArgument("winner index out of range");
  return calibrate_width(squared_distances(map.points(), map.point(winner_idx)), target, tol,
                         excluded);
}

struct QualityRow {
  double perplexity = 0.0;
  double kl_qp = 0.0;
  double kl_pq = 0.0;
  double neg_log_px = 0.0;
  double j_som = 0.0;
  double j_sne = 0.0;
  std::size_t n_failed = 0;
  /// False when every stimulus failed calibration; the means are then NaN.
  bool valid = true;
};

struct QualityCurve {
  std::vector<QualityRow> rows;

  void write_csv(std::ostream& os) const {
    os << "perplexity,kl_qp,kl_pq,neg_log_px,j_som,j_sne,n_failed\n";
    os.precision(17);
    for (const auto& r : rows) {
      os << r.perplexity << ',' << r.kl_qp << ',' << r.kl_pq << ',' << r.neg_log_px << ','
         << r.j_som << ',' << r.j_sne << ',' << r.n_failed << '\n';
    }
  }
};

/// How stimuli relate to neurons during evaluation.
///   general  - the winner is the nearest weight, every neuron takes part
///   standard - the data are the map's own weights (one neuron per stimulus):
///              stimulus j's winner is neuron j, and j is left out of p, q and
///              the mixture density (a leave-one-out evaluation)
enum class EvalMode { general, standard };

/// Averaged objective components at each target perplexity. Stimuli whose
/// sigma or scale cannot be calibrated are left out of the means and counted.
inline QualityCurve quality_curve(const MapModel& map, const Dataset& data,
                                  std::span<const double> perplexities,
                                  double tol = kDefaultPerplexityTol,
                                  EvalMode mode = EvalMode::general) {
  if (data.empty()) throw InvalidArgument("dataset is empty");
  if (data.dim() != map.dim()) throw DimensionMismatch("dataset and map dimensions differ");
  if (perplexities.empty()) throw InvalidArgument("no perplexities requested");
  if (mode == EvalMode::standard && (data.m() != map.n() || data.x != map.weights())) {
    throw InvalidArgument("standard evaluation requires the data to equal the map weights");
  }
  if (mode == EvalMode::standard && map.n() < 2) {
    throw InvalidArgument("standard evaluation needs at least two neurons");
  }
  const std::size_t n_eff = mode == EvalMode::standard ? map.n() - 1 : map.n();
  for (std::size_t k = 0; k < perplexities.size(); ++k) {
    const double perp = perplexities[k];
    const bool single_neuron = n_eff == 1 && perp == 1.0;
    if (!single_neuron && !(perp > 1.0 && perp < static_cast<double>(n_eff))) {
      throw InvalidArgument("perplexity " + std::to_string(perp) + " outside (1, " +
                            std::to_string(n_eff) + ")");
    }
    if (k > 0 && !(perp > perplexities[k - 1])) {
      throw InvalidArgument("perplexities must be strictly increasing");
    }
  }

  const std::size_t n_perp = perplexities.size();
  std::vector<ObjectiveBreakdown> sums(n_perp);
  std::vector<std::size_t> ok(n_perp, 0);

  for (std::size_t s = 0; s < data.m(); ++s) {
    const auto sq_w = squared_distances(map.weights(), data.stimulus(s));
    std::optional<std::size_t> excluded;
    std::size_t win;
    if (mode == EvalMode::standard) {
      win = s;
      excluded = s;
    } else {
      win = winner_from_sqdists(sq_w);
    }
    const auto sq_z = squared_distances(map.points(), map.point(win));
    for (std::size_t k = 0; k < n_perp; ++k) {
      double sigma = 1.0, scale = 1.0;
      if (n_eff > 1) {
        try {
          sigma = calibrate_width(sq_w, perplexities[k], tol, excluded);
          scale = calibrate_width(sq_z, perplexities[k], tol, excluded);
        } catch (const CalibrationError&) {
          continue;
        }
      }
      const auto b =
          detail::objective_from_sqdists(sq_w, sq_z, sigma, scale, map.dim(), excluded);
      sums[k].kl_qp += b.kl_qp;
      sums[k].kl_pq += b.kl_pq;
      sums[k].neg_log_px += b.neg_log_px;
      ++ok[k];
    }
  }

  QualityCurve curve;
  for (std::size_t k = 0; k < n_perp; ++k) {
    QualityRow row;
    row.perplexity = perplexities[k];
    row.n_failed = data.m() - ok[k];
    if (ok[k] == 0) {
      row.valid = false;
      row.kl_qp = row.kl_pq = row.neg_log_px = row.j_som = row.j_sne = std::nan("");
    } else {
      const double cnt = static_cast<double>(ok[k]);
      row.kl_qp = sums[k].kl_qp / cnt;
      row.kl_pq = sums[k].kl_pq / cnt;
      row.neg_log_px = sums[k].neg_log_px / cnt;
      row.j_som = row.kl_qp + row.neg_log_px;
      row.j_sne = row.kl_pq + row.neg_log_px;
    }
    curve.rows.push_back(row);
  }
  return curve;
}

/// Same points, weights reassigned by a seeded uniform random permutation.
inline MapModel shuffle_weights(const MapModel& map, std::uint64_t seed) {
  if (map.n() < 2) throw InvalidArgument("shuffling needs at least two neurons");
  std::vector<std::size_t> perm(map.n());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix w(map.n(), map.dim());
  for (std::size_t i = 0; i < map.n(); ++i) {
    const auto src = map.weight(perm[i]);
    std::copy(src.begin(), src.end(), w.row(i).begin());
  }
  return MapModel(map.points(), std::move(w));
}

}  // namespace somsne
