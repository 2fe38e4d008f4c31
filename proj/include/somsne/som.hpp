#pragma once

// Stochastic self-organizing map trainer. The 2D points sit on a unit-spaced
// rectangular lattice and never move; the shrinking neighborhood is expressed
// as the scale passed to q(.|x).

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "somsne/core.hpp"
#include "somsne/dataset.hpp"

namespace somsne {

struct ScheduleParams {
  double sigma_i = 100.0;
  double sigma_f = 1e-10;
  double lambda_i = 1.0;
  double lambda_f = 1e-10;
  std::int64_t t_max = 100000;
};

struct GridSpec {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const noexcept { return rows * cols; }
};

/// v_i * (v_f / v_i)^(t / t_max). A constant schedule (v_i == v_f) may be zero.
inline double schedule_value(double v_i, double v_f, std::int64_t t, std::int64_t t_max) {
  if (t_max < 1) throw InvalidArgument("t_max must be >= 1");
  if (t < 0 || t > t_max) {
    throw InvalidArgument("schedule step " + std::to_string(t) + " outside [0, " +
                          std::to_string(t_max) + "]");
  }
  if (v_i == v_f) {
    if (!(v_i >= 0.0)) throw InvalidArgument("schedule values must be nonnegative");
    return v_i;
  }
  if (!(v_i > 0.0) || !(v_f > 0.0)) throw InvalidArgument("decaying schedule values must be positive");
  if (t == 0) return v_i;
  if (t == t_max) return v_f;
  const double frac = static_cast<double>(t) / static_cast<double>(t_max);
  return v_i * std::pow(v_f / v_i, frac);
}

inline Matrix grid_points(const GridSpec& grid) {
  if (grid.rows == 0 || grid.cols == 0) throw InvalidArgument("grid must have at least one cell");
  Matrix z(grid.size(), 2);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      z(r * grid.cols + c, 0) = static_cast<double>(r);
      z(r * grid.cols + c, 1) = static_cast<double>(c);
    }
  }
  return z;
}

/// Lattice points in row-major order; weights drawn uniformly inside the
/// per-dimension bounding box of the data.
inline MapModel init_grid_map(const GridSpec& grid, const Dataset& data, std::uint64_t seed) {
  if (data.empty()) throw InvalidArgument("dataset is empty");
  Matrix z = grid_points(grid);
  const std::size_t d = data.dim();
  std::vector<double> lo(d, kInf), hi(d, -kInf);
  for (std::size_t s = 0; s < data.m(); ++s) {
    const auto x = data.stimulus(s);
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], x[k]);
      hi[k] = std::max(hi[k], x[k]);
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix w(grid.size(), d);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) w(i, k) = lo[k] + (hi[k] - lo[k]) * unit(rng);
  }
  return MapModel(std::move(z), std::move(w));
}

struct SomLogRow {
  std::int64_t t = 0;
  double sigma = 0.0;
  double lambda = 0.0;
};

struct SomLog {
  std::vector<SomLogRow> rows;

  void write_csv(std::ostream& os) const {
    os << "t,sigma,lambda\n";
    os.precision(17);
    for (const auto& r : rows) os << r.t << ',' << r.sigma << ',' << r.lambda << '\n';
  }
};

struct SomResult {
  MapModel map;
  SomLog log;
};

/// Online SOM: each step draws one stimulus uniformly (with replacement),
/// finds its winner and moves every weight by lambda(t) * q(i|x) * (x - w_i),
/// with q taken at scale sigma(t). `log_stride` == 0 disables logging.
inline SomResult train_som(const MapModel& init, const Dataset& data, const ScheduleParams& sched,
                           std::uint64_t seed, std::int64_t log_stride = 1000) {
  if (data.empty()) throw InvalidArgument("dataset is empty");
  if (data.dim() != init.dim()) {
    throw DimensionMismatch("dataset dimension " + std::to_string(data.dim()) +
                            " does not match map dimension " + std::to_string(init.dim()));
  }
  if (sched.t_max < 1) throw InvalidArgument("t_max must be >= 1");

  const std::size_t n = init.n();
  const std::size_t d = init.dim();
  const Matrix& z = init.points();
  Matrix w = init.weights();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.m() - 1);
  SomLog log;
  std::vector<double> sq_w(n), sq_z(n), logits;

  for (std::int64_t t = 0; t < sched.t_max; ++t) {
    const double sigma = schedule_value(sched.sigma_i, sched.sigma_f, t, sched.t_max);
    const double lambda = schedule_value(sched.lambda_i, sched.lambda_f, t, sched.t_max);
    if (log_stride > 0 && t % log_stride == 0) log.rows.push_back({t, sigma, lambda});

    const auto x = data.stimulus(pick(rng));
    for (std::size_t i = 0; i < n; ++i) sq_w[i] = squared_distance(w.row(i), x);
    const std::size_t win = winner_from_sqdists(sq_w);
    for (std::size_t i = 0; i < n; ++i) sq_z[i] = squared_distance(z.row(i), z.row(win));

    const double log_z = detail::shifted_logits(sq_z, 1.0 / (sigma * sigma), std::nullopt, logits);
    for (std::size_t i = 0; i < n; ++i) {
      const double step = lambda * std::exp(logits[i] - log_z);
      if (step == 0.0) continue;
      auto wi = w.row(i);
      for (std::size_t k = 0; k < d; ++k) wi[k] += step * (x[k] - wi[k]);
      for (std::size_t k = 0; k < d; ++k) {
        if (!std::isfinite(wi[k])) {
          throw NumericalError("non-finite weight for neuron " + std::to_string(i) + " at step " +
                               std::to_string(t) + " (sigma=" + std::to_string(sigma) +
                               ", lambda=" + std::to_string(lambda) + ")");
        }
      }
    }
  }
  return {MapModel(z, std::move(w)), std::move(log)};
}

}  // namespace somsne
