// lagbias command-line tool.
//
// Exit codes: 0 success, 1 usage error, 2 input/data error, 3 inference failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lagbias/analysis.hpp"
#include "lagbias/bias_model.hpp"
#include "lagbias/dataset.hpp"
#include "lagbias/hmc.hpp"
#include "lagbias/io.hpp"
#include "lagbias/ratio_model.hpp"
#include "lagbias/rng.hpp"

namespace fs = std::filesystem;
using namespace lagbias;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInference = 3;

constexpr int kPinnedLaureates = 688;
constexpr int kPinnedFemale = 21;

// Stream index under the run seed used for prior draws, kept away from the
// per-chain indices 0..n_chains-1.
constexpr std::uint64_t kPriorStream = 1000;

struct Options {
  std::string laureates = LAGBIAS_DATA_DIR "/laureates.csv";
  std::string ratios = LAGBIAS_DATA_DIR "/ratios.csv";
  int delta = 10;
  int delta_min = 0;
  int delta_max = kMaxDelta;
  HmcConfig hmc{};
  std::size_t prior_draws = 100000;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string out;
  bool skip_pins = false;
  bool skip_sweep = false;
};

struct Inputs {
  std::vector<LaureateRecord> records;
  std::vector<RatioPoint> points;
  std::string laureates_checksum;
  std::string ratios_checksum;
};

Inputs load_inputs(const Options& o) {
  Inputs in;
  in.records = load_laureates(o.laureates);
  in.points = load_ratios(o.ratios);
  in.laureates_checksum = file_checksum(o.laureates);
  in.ratios_checksum = file_checksum(o.ratios);
  return in;
}

RunMetadata metadata(const std::string& command, const Options& o, const Inputs& in, int delta) {
  RunMetadata m;
  m.command = command;
  m.delta = delta;
  m.config = o.hmc;
  m.laureates_path = o.laureates;
  m.ratios_path = o.ratios;
  m.laureates_checksum = in.laureates_checksum;
  m.ratios_checksum = in.ratios_checksum;
  return m;
}

// Collects written files so the manifest can list them.
class RunDir {
 public:
  explicit RunDir(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    outputs_.push_back(name);
  }
  void add(const std::vector<std::string>& names) {
    outputs_.insert(outputs_.end(), names.begin(), names.end());
  }
  void finish(const RunMetadata& meta) {
    write_atomic(dir_ / "manifest.json", manifest_json(meta, outputs_));
  }
  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> outputs_;
};

std::array<double, kNumFields> alpha_max_of(const PreparedDataset& data) {
  std::array<double, kNumFields> out{};
  for (auto f : kFields) out[index_of(f)] = data[f].alpha_max;
  return out;
}

void print_summary(const PosteriorRun& run) {
  std::printf("%-18s %8s %8s %8s %8s %10s %8s\n", "parameter", "mean", "sd", "2.5%", "97.5%",
              "P(>=1)", "rhat");
  for (const auto& s : run.summaries) {
    std::printf("%-18s %8.4f %8.4f %8.4f %8.4f %10.4f %8.4f\n", s.name.c_str(), s.mean, s.sd,
                s.quantiles.front(), s.quantiles.back(), s.prob_ge_one, s.rhat);
  }
  std::printf("divergences: %d\n", run.diagnostics.divergences);
}

int cmd_validate(const Options& o) {
  const auto in = load_inputs(o);
  const auto s = summarize(in.records);
  for (auto f : kFields) {
    std::printf("%-10s %4d laureates, %3d female\n", std::string(to_string(f)).c_str(),
                s[f].awarded, s[f].female);
  }
  for (auto g : kGroups) {
    const auto pts = points_for(in.points, g);
    std::printf("ratios %-9s %zu points, %d-%d\n", std::string(to_string(g)).c_str(), pts.size(),
                pts.front().year, pts.back().year);
  }
  std::printf("%d laureates, %d female\n", s.total.awarded, s.total.female);
  if (!o.skip_pins && (s.total.awarded != kPinnedLaureates || s.total.female != kPinnedFemale)) {
    std::fprintf(stderr, "error: expected %d laureates and %d female (use --skip-pins for other data)\n",
                 kPinnedLaureates, kPinnedFemale);
    return kExitData;
  }
  return 0;
}

int cmd_fit_ratios(const Options& o) {
  const auto in = load_inputs(o);
  const auto curves = fit_all(in.points);
  RunDir run(o.out);
  run.write("curves.json", curves_json(curves));
  for (const auto& c : curves) {
    std::printf("%-9s L=%.4f k=%.4f t0=%.1f rms=%.4f\n", std::string(to_string(c.group)).c_str(),
                c.params.ceiling, c.params.steepness, c.params.midpoint, c.rms_residual);
  }
  run.finish(metadata("fit-ratios", o, in, o.delta));
  return 0;
}

int cmd_prior(const Options& o) {
  const auto in = load_inputs(o);
  const auto curves = fit_all(in.points);
  const auto data = prepare(in.records, curves, o.delta);
  const auto amax = alpha_max_of(data);
  const auto prior = sample_prior(o.prior_draws, derive_seed(o.hmc.seed, kPriorStream), amax);
  const auto meta = metadata("prior", o, in, o.delta);
  RunDir run(o.out);
  run.write("prior.json", prior_json(prior, amax, meta));
  run.write("prior_draws.csv", prior_draws_csv(prior));
  const auto pooled = prior.pooled_alpha();
  std::printf("%zu prior draws, rejection fraction %.4f, P(alpha>=1) %.4f\n", prior.size(),
              prior.rejection_fraction(), prob_ge(pooled, 1.0));
  run.finish(meta);
  return 0;
}

PosteriorRun posterior_with_figures(const Options& o, const Inputs& in, RunDir& run,
                                    const SweepTable* sweep) {
  const auto curves = fit_all(in.points);
  const auto data = prepare(in.records, curves, o.delta);
  HmcConfig config = o.hmc;
  config.parallel_chains = true;
  auto result = run_posterior(data, config);
  const auto meta = metadata("sample", o, in, o.delta);
  run.write("draws.json", draws_json(result.draws, result.diagnostics));
  run.write("summary.json", summary_json(result, meta));
  const auto prior =
      sample_prior(o.prior_draws, derive_seed(o.hmc.seed, kPriorStream), alpha_max_of(data));
  FigureInputs fig;
  fig.records = in.records;
  fig.points = in.points;
  fig.curves = &curves;
  fig.prior = &prior;
  fig.posterior = &result.draws;
  fig.delta = o.delta;
  fig.sweep = sweep;
  run.add(emit_figure_data(run.path(), fig));
  return result;
}

SweepTable run_sweep(const Options& o, const Inputs& in) {
  const auto curves = fit_all(in.points);
  SweepOptions so;
  so.delta_min = o.delta_min;
  so.delta_max = o.delta_max;
  so.workers = o.jobs;
  std::mutex mu;
  so.on_done = [&mu](int delta) {
    std::lock_guard lock(mu);
    std::fprintf(stderr, "delta %d done\n", delta);
  };
  return delta_sweep(in.records, curves, o.hmc, so);
}

int cmd_sample(const Options& o) {
  const auto in = load_inputs(o);
  RunDir run(o.out);
  const auto result = posterior_with_figures(o, in, run, nullptr);
  print_summary(result);
  run.finish(metadata("sample", o, in, o.delta));
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto in = load_inputs(o);
  const auto table = run_sweep(o, in);
  RunDir run(o.out);
  run.write("sweep.csv", sweep_csv(table));
  run.write("fig4.json", fig4_json(table));
  double worst = 0;
  for (const auto& r : table.rows) worst = std::max(worst, r.prob_ge_one);
  std::printf("%zu rows, max P(alpha>=1) %.4f\n", table.rows.size(), worst);
  run.finish(metadata("sweep", o, in, o.delta));
  return 0;
}

int cmd_figures(const Options& o) {
  const auto in = load_inputs(o);
  RunDir run(o.out);
  SweepTable table;
  if (!o.skip_sweep) {
    table = run_sweep(o, in);
    run.write("sweep.csv", sweep_csv(table));
  }
  posterior_with_figures(o, in, run, o.skip_sweep ? nullptr : &table);
  run.finish(metadata("figures", o, in, o.delta));
  return 0;
}

// Leaves a record of the failed run next to where its results would have gone.
int inference_failure(const std::string& command, const Options& o, const std::string& what) {
  Inputs in;
  try {
    in.laureates_checksum = file_checksum(o.laureates);
    in.ratios_checksum = file_checksum(o.ratios);
  } catch (const std::exception&) {
  }
  const fs::path path = fs::path(o.out) / "diagnostics.json";
  try {
    write_atomic(path, failure_json(metadata(command, o, in, o.delta), what));
    std::fprintf(stderr, "error: %s\ndiagnostics: %s\n", what.c_str(), path.string().c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n(could not write diagnostics: %s)\n", what.c_str(), e.what());
  }
  return kExitInference;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Bayesian estimate of gender bias in scientific Nobel Prizes"};
  app.require_subcommand(1);
  Options o;
  if (const char* env = std::getenv("LAGBIAS_OUT"); env && *env) {
    o.out = env;
  } else {
    o.out = "out";
  }

  auto inputs = [&](CLI::App* sub) {
    sub->add_option("--laureates", o.laureates, "laureate counts CSV")->capture_default_str();
    sub->add_option("--ratios", o.ratios, "faculty gender-ratio CSV")->capture_default_str();
  };
  auto output = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "output directory (default: $LAGBIAS_OUT or ./out)");
    sub->add_option("--seed", o.hmc.seed, "random seed")->capture_default_str();
  };
  auto delta = [&](CLI::App* sub) {
    sub->add_option("--delta", o.delta, "lag in years")->check(CLI::Range(0, kMaxDelta))->capture_default_str();
  };
  auto delta_range = [&](CLI::App* sub) {
    sub->add_option("--delta-min", o.delta_min)->check(CLI::Range(0, kMaxDelta))->capture_default_str();
    sub->add_option("--delta-max", o.delta_max)->check(CLI::Range(0, kMaxDelta))->capture_default_str();
    sub->add_option("--jobs", o.jobs, "parallel delta tasks")->check(CLI::PositiveNumber);
  };
  auto sampler = [&](CLI::App* sub) {
    sub->add_option("--chains", o.hmc.n_chains)->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--warmup", o.hmc.n_warmup)->check(CLI::NonNegativeNumber)->capture_default_str();
    sub->add_option("--draws", o.hmc.n_draws)->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--target-accept", o.hmc.target_accept)
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  };
  auto prior_count = [&](CLI::App* sub) {
    sub->add_option("--prior-draws", o.prior_draws, "ancestral prior draws")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  auto* validate = app.add_subcommand("validate", "load both CSVs and print dataset totals");
  inputs(validate);
  validate->add_flag("--skip-pins", o.skip_pins, "do not check the published totals");

  auto* fit = app.add_subcommand("fit-ratios", "fit logistic ratio curves, write curves.json");
  inputs(fit);
  output(fit);

  auto* prior = app.add_subcommand("prior", "ancestral prior draws, write prior.json and prior_draws.csv");
  inputs(prior);
  output(prior);
  delta(prior);
  prior_count(prior);

  auto* sample_cmd = app.add_subcommand("sample", "posterior at one lag, write draws, summary and figure data");
  inputs(sample_cmd);
  output(sample_cmd);
  delta(sample_cmd);
  sampler(sample_cmd);
  prior_count(sample_cmd);

  auto* sweep = app.add_subcommand("sweep", "posterior over a range of lags, write sweep.csv and fig4.json");
  inputs(sweep);
  output(sweep);
  delta_range(sweep);
  sampler(sweep);

  auto* figures = app.add_subcommand("figures", "run the full pipeline and write fig1..fig4.json");
  inputs(figures);
  output(figures);
  delta(figures);
  delta_range(figures);
  sampler(figures);
  prior_count(figures);
  figures->add_flag("--skip-sweep", o.skip_sweep, "omit the lag sweep and fig4.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    o.hmc.validate();
    if (o.delta_min > o.delta_max) throw std::invalid_argument("--delta-min exceeds --delta-max");
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  try {
    if (command == "validate") return cmd_validate(o);
    if (command == "fit-ratios") return cmd_fit_ratios(o);
    if (command == "prior") return cmd_prior(o);
    if (command == "sample") return cmd_sample(o);
    if (command == "sweep") return cmd_sweep(o);
    if (command == "figures") return cmd_figures(o);
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const FitError& e) {
    return inference_failure(command, o, std::string("ratio fit: ") + e.what());
  } catch (const SamplerError& e) {
    return inference_failure(command, o, e.what());
  } catch (const SweepError& e) {
    return inference_failure(command, o, e.what());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
