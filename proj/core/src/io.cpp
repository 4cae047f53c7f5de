#include "lagbias/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lagbias {

namespace {

using json = nlohmann::ordered_json;

std::string number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string quantile_key(double level) { return number(level * 100.0) + "%"; }

json config_json(const HmcConfig& c) {
  return json{{"chains", c.n_chains},
              {"warmup", c.n_warmup},
              {"draws", c.n_draws},
              {"target_accept", c.target_accept},
              {"leapfrog_steps", c.leapfrog_steps},
              {"step_jitter", c.step_jitter},
              {"seed", c.seed}};
}

json metadata_json(const RunMetadata& m) {
  return json{{"command", m.command},
              {"delta", m.delta},
              {"seed", m.config.seed},
              {"config", config_json(m.config)},
              {"inputs",
               {{"laureates", {{"path", m.laureates_path}, {"fnv1a64", m.laureates_checksum}}},
                {"ratios", {{"path", m.ratios_path}, {"fnv1a64", m.ratios_checksum}}}}}};
}

json summary_entry(const Summary& s) {
  json q = json::object();
  for (std::size_t i = 0; i < kQuantileLevels.size(); ++i)
    q[quantile_key(kQuantileLevels[i])] = s.quantiles[i];
  return json{{"mean", s.mean}, {"sd", s.sd},   {"quantiles", q},
              {"prob_ge_one", s.prob_ge_one}, {"ess", s.ess}, {"rhat", s.rhat}};
}

json curve_series(const RatioCurve& c) {
  json years = json::array(), ratios = json::array();
  for (int y = kFirstCurveYear; y <= kLastCurveYear; ++y) {
    years.push_back(y);
    ratios.push_back(eval_ratio(c, y));
  }
  return json{{"year", years}, {"ratio", ratios}};
}

json params_json(const RatioCurve& c) {
  return json{{"ceiling", c.params.ceiling},
              {"steepness", c.params.steepness},
              {"midpoint", c.params.midpoint},
              {"rms_residual", c.rms_residual}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64_hex(bytes);
}

std::string curves_json(const CurveSet& curves) {
  json groups = json::array();
  for (const auto& c : curves) {
    json g{{"group", to_string(c.group)}};
    g.update(params_json(c));
    g["series"] = curve_series(c);
    groups.push_back(std::move(g));
  }
  return dump(json{{"model", "r(t) = ceiling / (1 + exp(-steepness * (t - midpoint)))"},
                   {"groups", groups}});
}

std::string draws_json(const PosteriorDraws& draws, const Diagnostics& diagnostics) {
  json chains = json::array();
  for (std::size_t c = 0; c < draws.n_chains; ++c) {
    json rows = json::array();
    for (std::size_t d = 0; d < draws.n_draws; ++d) {
      json row = json::array();
      for (std::size_t k = 0; k < draws.dim; ++k) row.push_back(draws.at(c, d, k));
      rows.push_back(std::move(row));
    }
    chains.push_back(json{{"chain", c},
                          {"accept_rate", draws.accept_rate[c]},
                          {"divergences", draws.divergences[c]},
                          {"step_size", draws.step_size[c]},
                          {"draws", std::move(rows)}});
  }
  json rhat = json::object(), ess = json::object();
  for (std::size_t k = 0; k < draws.dim && k < diagnostics.rhat.size(); ++k) {
    rhat[draws.names[k]] = diagnostics.rhat[k];
    ess[draws.names[k]] = diagnostics.ess[k];
  }
  return dump(json{{"parameters", draws.names},
                   {"chains", std::move(chains)},
                   {"diagnostics",
                    {{"rhat", rhat}, {"ess", ess}, {"divergences", diagnostics.divergences}}}});
}

std::string summary_json(const PosteriorRun& run, const RunMetadata& meta) {
  json fields = json::object();
  for (auto f : kFields) {
    auto entry = summary_entry(run.summaries[1 + index_of(f)]);
    entry["alpha_max"] = run.alpha_max[index_of(f)];
    fields[std::string(to_string(f))] = std::move(entry);
  }
  double max_rhat = 0, min_ess = std::numeric_limits<double>::infinity();
  for (const auto& s : run.summaries) {
    max_rhat = std::max(max_rhat, s.rhat);
    min_ess = std::min(min_ess, s.ess);
  }
  return dump(json{{"metadata", metadata_json(meta)},
                   {"mu", summary_entry(run.summaries[0])},
                   {"fields", std::move(fields)},
                   {"diagnostics",
                    {{"max_rhat", max_rhat},
                     {"min_ess", min_ess},
                     {"divergences", run.diagnostics.divergences},
                     {"accept_rate", run.draws.accept_rate},
                     {"step_size", run.draws.step_size}}}});
}

std::string prior_json(const PriorDraws& prior, const std::array<double, kNumFields>& alpha_max,
                       const RunMetadata& meta) {
  const auto pooled = prior.pooled_alpha();
  const double n = static_cast<double>(pooled.size());
  const double mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / n;
  double ss = 0;
  for (double x : pooled) ss += (x - mean) * (x - mean);
  json amax = json::object();
  for (auto f : kFields) amax[std::string(to_string(f))] = alpha_max[index_of(f)];
  return dump(json{{"metadata", metadata_json(meta)},
                   {"n", prior.size()},
                   {"alpha_max", amax},
                   {"rejection_fraction", prior.rejection_fraction()},
                   {"alpha_pooled",
                    {{"mean", mean},
                     {"sd", std::sqrt(ss / (n - 1.0))},
                     {"prob_ge_one", prob_ge(pooled, 1.0)}}}});
}

std::string manifest_json(const RunMetadata& meta, std::span<const std::string> outputs) {
  return dump(json{{"metadata", metadata_json(meta)},
                   {"outputs", std::vector<std::string>(outputs.begin(), outputs.end())}});
}

std::string failure_json(const RunMetadata& meta, std::string_view error) {
  return dump(json{{"metadata", metadata_json(meta)}, {"status", "failed"}, {"error", error}});
}

std::string prior_draws_csv(const PriorDraws& prior) {
  std::string out;
  const auto names = parameter_names();
  for (std::size_t k = 0; k < names.size(); ++k) out += (k ? "," : "") + names[k];
  out += "\n";
  for (std::size_t i = 0; i < prior.size(); ++i) {
    out += number(prior.mu[i]);
    for (const auto& a : prior.alpha) out += "," + number(a[i]);
    out += "\n";
  }
  return out;
}

std::string sweep_csv(const SweepTable& table) {
  std::string out = "delta,field,prob_ge_one,mean_alpha\n";
  for (const auto& r : table.rows) {
    out += std::to_string(r.delta) + "," + std::string(to_string(r.field)) + "," +
           number(r.prob_ge_one) + "," + number(r.mean_alpha) + "\n";
  }
  return out;
}

std::string fig1_json(std::span<const LaureateRecord> records) {
  const auto summary = summarize(records);
  json fields = json::array(), male = json::array(), female = json::array();
  json per_year = json::object();
  for (auto f : kFields) {
    fields.push_back(to_string(f));
    male.push_back(summary[f].male());
    female.push_back(summary[f].female);
    json years = json::array(), m = json::array(), w = json::array();
    for (const auto& r : records_for(records, f)) {
      years.push_back(r.year);
      m.push_back(r.n_awarded - r.n_female);
      w.push_back(r.n_female);
    }
    per_year[std::string(to_string(f))] = {{"year", years}, {"male", m}, {"female", w}};
  }
  return dump(json{{"figure", "fig1"},
                   {"title", "Gender distribution of scientific Nobel Prizes"},
                   {"x_label", "field"},
                   {"y_label", "laureates"},
                   {"fields", fields},
                   {"male", male},
                   {"female", female},
                   {"totals", {{"laureates", summary.total.awarded}, {"female", summary.total.female}}},
                   {"per_year", per_year}});
}

std::string fig2_json(const CurveSet& curves, std::span<const RatioPoint> points) {
  json groups = json::array();
  for (const auto& c : curves) {
    json years = json::array(), ratios = json::array();
    for (const auto& p : points_for(points, c.group)) {
      years.push_back(p.year);
      ratios.push_back(p.ratio);
    }
    groups.push_back(json{{"group", to_string(c.group)},
                          {"params", params_json(c)},
                          {"points", {{"year", years}, {"ratio", ratios}}},
                          {"curve", curve_series(c)}});
  }
  return dump(json{{"figure", "fig2"},
                   {"title", "Female share of senior faculty with logistic fit"},
                   {"x_label", "year"},
                   {"y_label", "gender ratio r"},
                   {"groups", groups}});
}

std::string fig3_json(const PriorDraws& prior, const PosteriorDraws& posterior, int delta) {
  const auto prior_density =
      kernel_density(prior.pooled_alpha(), kDensityLo, kDensityHi, kDensityPoints);
  json post = json::object(), bandwidth = json::object();
  bandwidth["prior"] = prior_density.bandwidth;
  for (auto f : kFields) {
    const auto d = kernel_density(posterior.pooled(1 + index_of(f)), kDensityLo, kDensityHi,
                                  kDensityPoints);
    post[std::string(to_string(f))] = d.y;
    bandwidth[std::string(to_string(f))] = d.bandwidth;
  }
  return dump(json{{"figure", "fig3"},
                   {"title", "Prior and posterior density of alpha"},
                   {"delta", delta},
                   {"x_label", "alpha"},
                   {"y_label", "probability density"},
                   {"kernel", "gaussian, silverman bandwidth, reflected at 0"},
                   {"x", prior_density.x},
                   {"prior", prior_density.y},
                   {"posterior", post},
                   {"bandwidth", bandwidth}});
}

std::string fig4_json(const SweepTable& table) {
  json deltas = json::array();
  json series = json::object();
  for (auto f : kFields) series[std::string(to_string(f))] = json::array();
  for (const auto& r : table.rows) {
    if (deltas.empty() || deltas.back().get<int>() != r.delta) deltas.push_back(r.delta);
    series[std::string(to_string(r.field))].push_back(r.prob_ge_one);
  }
  return dump(json{{"figure", "fig4"},
                   {"title", "Probability that alpha >= 1 versus lag"},
                   {"x_label", "delta (years)"},
                   {"y_label", "P(alpha >= 1)"},
                   {"delta", deltas},
                   {"series", series}});
}

std::vector<std::string> emit_figure_data(const std::filesystem::path& dir, const FigureInputs& in) {
  std::vector<std::string> written;
  write_atomic(dir / "fig1.json", fig1_json(in.records));
  written.emplace_back("fig1.json");
  if (in.curves) {
    write_atomic(dir / "fig2.json", fig2_json(*in.curves, in.points));
    written.emplace_back("fig2.json");
  }
  if (in.prior && in.posterior) {
    write_atomic(dir / "fig3.json", fig3_json(*in.prior, *in.posterior, in.delta));
    written.emplace_back("fig3.json");
  }
  if (in.sweep) {
    write_atomic(dir / "fig4.json", fig4_json(*in.sweep));
    written.emplace_back("fig4.json");
  }
  return written;
}

}  // namespace lagbias
