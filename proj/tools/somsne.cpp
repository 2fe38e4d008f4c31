// somsne: train SOM / SNE maps and score them with perplexity-calibrated
// quality curves.
//
// Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "somsne/calibrate.hpp"
#include "somsne/data.hpp"
#include "somsne/map_file.hpp"
#include "somsne/pipeline.hpp"
#include "somsne/sne.hpp"
#include "somsne/som.hpp"
#include "somsne/svg.hpp"

namespace {

using namespace somsne;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Usage problems detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_data_options(CLI::App* cmd, DataSource& src, bool required = true) {
  auto* opt = cmd->add_option("--data", src.path, "CSV file or IDX image file (optionally gzipped)");
  if (required) opt->required();
  cmd->add_flag("--labels", src.labels, "CSV: last column is an integer label");
  cmd->add_flag("--skip-header", src.skip_header, "CSV: ignore the first line");
  cmd->add_option("--idx-labels", src.idx_labels, "IDX labels file matching the images");
  cmd->add_flag("--raw", src.raw, "IDX: keep pixel values in 0..255");
  cmd->add_option("--subsample", src.subsample, "use a seeded random subset of this many rows")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--subsample-seed", src.subsample_seed, "seed for --subsample");
}

template <typename Log>
void maybe_write_log(const std::string& path, const Log& log) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  log.write_csv(out);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--perplexities: not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--perplexities: empty list");
  return out;
}

GridSpec require_grid(const std::string& text, const char* flag) {
  const auto grid = parse_grid(text);
  if (!grid) throw UsageError(std::string(flag) + ": expected ROWSxCOLS, got '" + text + "'");
  return *grid;
}

int run(int argc, char** argv) {
  CLI::App app{"Self-organizing maps and stochastic neighbor embedding as dual map learners"};
  app.require_subcommand(1);

  // gen-moons
  auto* gen = app.add_subcommand("gen-moons", "write a two-moons dataset (CSV with labels)");
  std::size_t moons_n = 1000;
  double moons_noise = 0.1;
  std::uint64_t moons_seed = 0;
  std::string moons_out;
  gen->add_option("--n", moons_n, "number of points")->check(CLI::Range(2ul, 1ul << 31));
  gen->add_option("--noise", moons_noise, "Gaussian noise std")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", moons_seed, "random seed");
  gen->add_option("--out", moons_out, "output CSV")->required();

  // train-som
  auto* som = app.add_subcommand("train-som", "train a rectangular-grid SOM");
  DataSource som_data;
  add_data_options(som, som_data);
  std::string som_grid;
  ScheduleParams sched;
  std::uint64_t som_seed = 0;
  std::string som_out, som_log;
  std::int64_t som_stride = 1000;
  som->add_option("--grid", som_grid, "lattice size, e.g. 10x10")->required();
  som->add_option("--sigma-i", sched.sigma_i, "initial neighborhood width")->check(CLI::PositiveNumber);
  som->add_option("--sigma-f", sched.sigma_f, "final neighborhood width")->check(CLI::PositiveNumber);
  som->add_option("--lambda-i", sched.lambda_i, "initial learning rate")->check(CLI::NonNegativeNumber);
  som->add_option("--lambda-f", sched.lambda_f, "final learning rate")->check(CLI::NonNegativeNumber);
  som->add_option("--tmax", sched.t_max, "number of training steps")->check(CLI::PositiveNumber);
  som->add_option("--seed", som_seed, "random seed (initialization and sampling)");
  som->add_option("--out", som_out, "output map file (JSON)")->required();
  som->add_option("--log", som_log, "optional training log CSV (t,sigma,lambda)");
  som->add_option("--log-stride", som_stride, "steps between log rows")->check(CLI::PositiveNumber);

  // kmeans
  auto* km = app.add_subcommand("kmeans", "k-means centroids for general-mode SNE");
  DataSource km_data;
  add_data_options(km, km_data);
  std::size_t km_k = 100, km_iters = 300;
  std::uint64_t km_seed = 0;
  std::string km_out;
  km->add_option("--k", km_k, "number of clusters")->check(CLI::PositiveNumber);
  km->add_option("--max-iters", km_iters, "Lloyd iteration cap")->check(CLI::PositiveNumber);
  km->add_option("--seed", km_seed, "random seed");
  km->add_option("--out", km_out, "output centroid CSV")->required();

  // train-sne
  auto* sne = app.add_subcommand("train-sne", "learn 2D points for fixed neuron weights");
  DataSource sne_data;
  add_data_options(sne, sne_data);
  std::string sne_weights, sne_out, sne_log;
  bool sne_standard = false;
  SneConfig cfg;
  auto* w_opt = sne->add_option("--weights", sne_weights, "neuron weights CSV (general mode)");
  auto* s_opt = sne->add_flag("--standard", sne_standard, "one neuron per stimulus (weights := data)");
  w_opt->excludes(s_opt);
  sne->add_option("--perplexity", cfg.perplexity, "target perplexity of p(.|x)")->check(CLI::PositiveNumber);
  sne->add_option("--iters", cfg.iters, "gradient iterations")->check(CLI::NonNegativeNumber);
  sne->add_option("--lr", cfg.learning_rate, "learning rate")->check(CLI::PositiveNumber);
  sne->add_option("--momentum", cfg.momentum, "momentum in [0,1)")->check(CLI::Range(0.0, 0.999999));
  sne->add_option("--init-std", cfg.init_std, "std of the initial layout")->check(CLI::NonNegativeNumber);
  sne->add_option("--seed", cfg.seed, "random seed");
  sne->add_option("--out", sne_out, "output map file (JSON)")->required();
  sne->add_option("--log", sne_log, "optional training log CSV (iter,mean_kl_pq)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "quality curve of a map over target perplexities");
  DataSource ev_data;
  add_data_options(ev, ev_data);
  std::string ev_map, ev_perps = "2,5,10,20,50", ev_out;
  double ev_tol = kDefaultPerplexityTol;
  std::optional<std::uint64_t> ev_shuffle;
  bool ev_standard = false;
  ev->add_option("--map", ev_map, "map file (JSON)")->required();
  ev->add_option("--perplexities", ev_perps, "comma-separated, strictly increasing");
  ev->add_option("--tol", ev_tol, "perplexity calibration tolerance")->check(CLI::PositiveNumber);
  ev->add_option("--out", ev_out, "output CSV")->required();
  ev->add_option("--shuffle-seed", ev_shuffle, "evaluate the map with randomly permuted weights");
  ev->add_flag("--standard", ev_standard,
               "leave-one-out evaluation for one-neuron-per-stimulus maps "
               "(implied for standard-mode SNE map files)");

  // export-svg
  auto* sv = app.add_subcommand("export-svg", "render a map as an SVG scatter");
  DataSource sv_data;
  add_data_options(sv, sv_data, false);
  std::string sv_map, sv_space = "vis", sv_out;
  std::vector<std::string> sv_edges{"none"};
  sv->add_option("--map", sv_map, "map file (JSON)")->required();
  sv->add_option("--space", sv_space, "vis or obs2d")->check(CLI::IsMember({"vis", "obs2d"}));
  sv->add_option("--edges", sv_edges, "'none' or 'grid RxC'")->expected(1, 2);
  sv->add_option("--out", sv_out, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) {
      write_csv(moons_out, gen_moons(moons_n, moons_noise, moons_seed));
    } else if (*som) {
      const GridSpec grid = require_grid(som_grid, "--grid");
      const Dataset data = load_dataset(som_data);
      const MapModel init = init_grid_map(grid, data, som_seed);
      const auto res = train_som(init, data, sched, som_seed, som_stride);
      write_map_file(som_out, res.map, som_provenance(data, grid, sched, som_seed));
      maybe_write_log(som_log, res.log);
    } else if (*km) {
      const Dataset data = load_dataset(km_data);
      const auto res = kmeans_weights(data, km_k, km_seed, km_iters);
      std::ofstream out(km_out, std::ios::binary);
      if (!out) throw Error("cannot write '" + km_out + "'");
      write_csv(out, res.centroids);
      std::cerr << "kmeans: k=" << km_k << " inertia=" << res.inertia
                << " iterations=" << res.iterations << "\n";
    } else if (*sne) {
      if (sne_weights.empty() && !sne_standard) {
        throw UsageError("train-sne: give either --weights FILE or --standard");
      }
      const Dataset data = load_dataset(sne_data);
      cfg.mode = sne_standard ? SneMode::standard : SneMode::general;
      const Matrix weights = sne_standard ? data.x : load_csv(sne_weights, false).x;
      const auto res = train_sne(weights, data, cfg);
      write_map_file(sne_out, res.map, sne_provenance(data, weights, cfg));
      maybe_write_log(sne_log, res.log);
    } else if (*ev) {
      const auto perps = parse_list(ev_perps);
      const Dataset data = load_dataset(ev_data);
      const MapFile mf = read_map_file(ev_map);
      const MapModel map = ev_shuffle ? shuffle_weights(mf.map, *ev_shuffle) : mf.map;
      const bool standard = ev_standard || (is_standard_sne(mf.provenance) && !ev_shuffle);
      const auto curve = quality_curve(map, data, perps, ev_tol,
                                       standard ? EvalMode::standard : EvalMode::general);
      std::ofstream out(ev_out, std::ios::binary);
      if (!out) throw Error("cannot write '" + ev_out + "'");
      curve.write_csv(out);
      for (const auto& row : curve.rows) {
        if (!row.valid) std::cerr << "warning: every stimulus failed calibration at perplexity " << row.perplexity << "\n";
      }
    } else if (*sv) {
      SvgOptions opt;
      opt.space = sv_space == "obs2d" ? PlotSpace::observation : PlotSpace::visualization;
      if (sv_edges.size() == 2 && sv_edges[0] == "grid") {
        opt.edges = require_grid(sv_edges[1], "--edges grid");
      } else if (!(sv_edges.size() == 1 && sv_edges[0] == "none")) {
        throw UsageError("--edges: expected 'none' or 'grid RxC'");
      }
      const MapFile mf = read_map_file(sv_map);
      if (!sv_data.path.empty()) {
        const Dataset data = load_dataset(sv_data);
        if (data.labels) opt.neuron_labels = neuron_labels_from_data(mf.map, data);
      }
      write_text(sv_out, render_svg(mf.map, opt));
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
