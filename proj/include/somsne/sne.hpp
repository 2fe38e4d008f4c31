#pragma once

// SNE as the dual of SOM: neuron weights are fixed, 2D points are learned by
// batch gradient descent on the forward-KL objective. Two modes:
//   standard - one neuron per stimulus, weights == data, self entries zeroed
//   general  - any fixed weights (e.g. k-means centroids), M != n allowed

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "somsne/calibrate.hpp"
#include "somsne/core.hpp"
#include "somsne/dataset.hpp"
#include "somsne/objectives.hpp"

namespace somsne {

enum class SneMode { standard, general };

struct SneConfig {
  double perplexity = 30.0;
  std::int64_t iters = 1000;
  double learning_rate = 10.0;
  double momentum = 0.8;
  double init_std = 1e-2;
  SneMode mode = SneMode::general;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. A cluster that empties is
/// reseeded at the point farthest from its current centroid.
inline KMeansResult kmeans_weights(const Dataset& data, std::size_t k, std::uint64_t seed,
                                   std::size_t max_iters = 300) {
  if (data.empty()) throw InvalidArgument("dataset is empty");
  if (k == 0) throw InvalidArgument("k must be positive");
  if (k > data.m()) {
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds the number of points (" +
                          std::to_string(data.m()) + ")");
  }
  if (max_iters == 0) throw InvalidArgument("max_iters must be positive");
  const std::size_t m = data.m();
  const std::size_t d = data.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix centers(k, d);
  std::vector<double> best_sq(m, kInf);
  auto set_center = [&](std::size_t c, std::size_t src) {
    const auto x = data.stimulus(src);
    std::copy(x.begin(), x.end(), centers.row(c).begin());
    for (std::size_t s = 0; s < m; ++s) {
      best_sq[s] = std::min(best_sq[s], squared_distance(data.stimulus(s), centers.row(c)));
    }
  };
  set_center(0, std::uniform_int_distribution<std::size_t>(0, m - 1)(rng));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : best_sq) total += v;
    std::size_t chosen = m - 1;
    if (total > 0.0) {
      const double r = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t s = 0; s < m; ++s) {
        acc += best_sq[s];
        if (r < acc) {
          chosen = s;
          break;
        }
      }
    } else {
      chosen = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
    }
    set_center(c, chosen);
  }

  std::vector<std::size_t> assign(m, k);
  std::vector<double> sq(m);
  KMeansResult res;
  for (std::size_t it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (std::size_t s = 0; s < m; ++s) {
      const auto x = data.stimulus(s);
      std::size_t best = 0;
      double bd = squared_distance(x, centers.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double dd = squared_distance(x, centers.row(c));
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      sq[s] = bd;
      if (assign[s] != best) {
        assign[s] = best;
        changed = true;
      }
    }
    res.iterations = it + 1;
    if (!changed && it > 0) break;

    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t s = 0; s < m; ++s) {
      const auto x = data.stimulus(s);
      auto row = sums.row(assign[s]);
      for (std::size_t j = 0; j < d; ++j) row[j] += x[j];
      ++counts[assign[s]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        const std::size_t far = static_cast<std::size_t>(
            std::max_element(sq.begin(), sq.end()) - sq.begin());
        const auto x = data.stimulus(far);
        std::copy(x.begin(), x.end(), centers.row(c).begin());
        sq[far] = 0.0;
        changed = true;
        continue;
      }
      auto row = centers.row(c);
      const auto srow = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) row[j] = srow[j] / static_cast<double>(counts[c]);
    }
  }

  res.inertia = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    double bd = kInf;
    for (std::size_t c = 0; c < k; ++c) {
      bd = std::min(bd, squared_distance(data.stimulus(s), centers.row(c)));
    }
    res.inertia += bd;
  }
  res.centroids = std::move(centers);
  return res;
}

/// Per-stimulus winner and calibrated p(.|x); constant during SNE training
/// because the weights do not move.
struct FixedAffinities {
  std::vector<std::size_t> winners;
  std::vector<CondDist> p;
  std::vector<double> sigmas;
  /// Index zeroed in both p and q for each stimulus (standard mode only).
  std::vector<std::optional<std::size_t>> excluded;
};

inline void check_standard_mode(const Matrix& weights, const Dataset& data) {
  if (data.m() != weights.rows() || data.x != weights) {
    throw InvalidArgument("standard SNE mode requires the weights to equal the data row for row");
  }
}

/// In standard mode stimulus j is neuron j's own weight: its winner is j and
/// entry j is removed from p. In general mode the winner is the nearest weight.
inline FixedAffinities precompute_affinities(const Matrix& weights, const Dataset& data,
                                             double perplexity, SneMode mode,
                                             double tol = kDefaultPerplexityTol) {
  if (data.empty()) throw InvalidArgument("dataset is empty");
  if (data.dim() != weights.cols()) throw DimensionMismatch("dataset and weight dimensions differ");
  if (mode == SneMode::standard) check_standard_mode(weights, data);
  const std::size_t n = weights.rows();
  const std::size_t n_eff = mode == SneMode::standard ? n - 1 : n;
  if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n_eff))) {
    throw InvalidArgument("perplexity " + std::to_string(perplexity) + " outside (1, " +
                          std::to_string(n_eff) + ")");
  }

  FixedAffinities aff;
  aff.winners.reserve(data.m());
  aff.p.reserve(data.m());
  aff.sigmas.reserve(data.m());
  aff.excluded.reserve(data.m());
  for (std::size_t s = 0; s < data.m(); ++s) {
    const auto sq = squared_distances(weights, data.stimulus(s));
    std::optional<std::size_t> excl;
    std::size_t win;
    if (mode == SneMode::standard) {
      win = s;
      excl = s;
    } else {
      win = winner_from_sqdists(sq);
    }
    double sigma;
    try {
      sigma = calibrate_width(sq, perplexity, tol, excl);
    } catch (const CalibrationError& e) {
      throw CalibrationError("stimulus " + std::to_string(s) + ": " + e.what());
    }
    aff.winners.push_back(win);
    aff.p.push_back(softmax_neg_sqdist(sq, 1.0 / (sigma * sigma), excl));
    aff.sigmas.push_back(sigma);
    aff.excluded.push_back(excl);
  }
  return aff;
}

/// n i.i.d. isotropic Gaussian 2D points with standard deviation init_std.
inline Matrix init_embedding(std::size_t n, double init_std, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("embedding needs at least one point");
  if (!(init_std >= 0.0)) throw InvalidArgument("init_std must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix z(n, 2);
  for (double& v : z.data()) v = init_std * gauss(rng);
  return z;
}

struct SneLogRow {
  std::int64_t iter = 0;
  double mean_kl_pq = 0.0;
};

struct SneLog {
  std::vector<SneLogRow> rows;

  void write_csv(std::ostream& os) const {
    os << "iter,mean_kl_pq\n";
    os.precision(17);
    for (const auto& r : rows) os << r.iter << ',' << r.mean_kl_pq << '\n';
  }
};

struct SneResult {
  MapModel map;
  SneLog log;
};

namespace detail {

/// Mean KL(p||q) at scale 1 over all stimuli; optionally accumulates the
/// mean negative gradient into `direction`.
inline double sne_pass(const Matrix& z, const FixedAffinities& aff, Matrix* direction) {
  const std::size_t m = aff.p.size();
  const double coeff = 1.0 / static_cast<double>(m);
  std::vector<double> sq(z.rows());
  double kl_sum = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t win = aff.winners[s];
    for (std::size_t i = 0; i < z.rows(); ++i) sq[i] = squared_distance(z.row(i), z.row(win));
    const CondDist q = softmax_neg_sqdist(sq, 1.0, aff.excluded[s]);
    kl_sum += kl_divergence(aff.p[s], q);
    if (direction) accumulate_sne_direction(z, aff.p[s], q, win, 1.0, coeff, *direction);
  }
  return kl_sum / static_cast<double>(m);
}

}  // namespace detail

inline double mean_kl_pq(const Matrix& z, const FixedAffinities& aff) {
  return detail::sne_pass(z, aff, nullptr);
}

/// Batch gradient descent with momentum on the points, starting from a
/// seeded Gaussian layout. Each iteration applies the stimulus-averaged
/// update direction. The log holds the mean KL(p||q) before every iteration
/// plus one final row after the last.
inline SneResult train_sne(const Matrix& weights, const Dataset& data, const SneConfig& cfg) {
  if (cfg.iters < 0) throw InvalidArgument("iters must be nonnegative");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw InvalidArgument("momentum must be in [0,1)");
  const FixedAffinities aff = precompute_affinities(weights, data, cfg.perplexity, cfg.mode);

  Matrix z = init_embedding(weights.rows(), cfg.init_std, cfg.seed);
  Matrix velocity(z.rows(), 2);
  SneLog log;
  for (std::int64_t it = 0; it < cfg.iters; ++it) {
    Matrix direction(z.rows(), 2);
    const double kl = detail::sne_pass(z, aff, &direction);
    log.rows.push_back({it, kl});
    auto& v = velocity.data();
    auto& pos = z.data();
    const auto& g = direction.data();
    for (std::size_t k = 0; k < pos.size(); ++k) {
      v[k] = cfg.momentum * v[k] + cfg.learning_rate * g[k];
      pos[k] += v[k];
    }
    if (!z.all_finite()) {
      throw NumericalError("non-finite point coordinates after iteration " + std::to_string(it) +
                           " (learning rate " + std::to_string(cfg.learning_rate) + ")");
    }
  }
  log.rows.push_back({cfg.iters, mean_kl_pq(z, aff)});
  return {MapModel(std::move(z), weights), std::move(log)};
}

}  // namespace somsne
