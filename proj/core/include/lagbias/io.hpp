#pragma once
// File interchange: JSON/CSV artifacts written by the command-line tool and
// read by the figure renderer.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lagbias/analysis.hpp"
#include "lagbias/dataset.hpp"
#include "lagbias/hmc.hpp"
#include "lagbias/ratio_model.hpp"

namespace lagbias {

// Writes to a sibling temp file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string fnv1a64_hex(std::string_view bytes);
std::string file_checksum(const std::filesystem::path& path);

struct RunMetadata {
  std::string command;
  int delta = 0;
  HmcConfig config{};
  std::string laureates_path;
  std::string ratios_path;
  std::string laureates_checksum;
  std::string ratios_checksum;
};

std::string curves_json(const CurveSet& curves);
std::string draws_json(const PosteriorDraws& draws, const Diagnostics& diagnostics);
std::string summary_json(const PosteriorRun& run, const RunMetadata& meta);
std::string prior_json(const PriorDraws& prior, const std::array<double, kNumFields>& alpha_max,
                       const RunMetadata& meta);
std::string manifest_json(const RunMetadata& meta, std::span<const std::string> outputs);
// Written instead of results when inference aborts.
std::string failure_json(const RunMetadata& meta, std::string_view error);

// Header: mu,alpha_chemistry,alpha_economics,alpha_physics,alpha_medicine
std::string prior_draws_csv(const PriorDraws& prior);

// Header: delta,field,prob_ge_one,mean_alpha
std::string sweep_csv(const SweepTable& table);

// Figure data. Every file carries "figure", "title", axis labels, and series.
std::string fig1_json(std::span<const LaureateRecord> records);
std::string fig2_json(const CurveSet& curves, std::span<const RatioPoint> points);

inline constexpr double kDensityLo = 0.0;
inline constexpr double kDensityHi = 2.5;
inline constexpr std::size_t kDensityPoints = 501;

std::string fig3_json(const PriorDraws& prior, const PosteriorDraws& posterior, int delta);
std::string fig4_json(const SweepTable& table);

struct FigureInputs {
  std::span<const LaureateRecord> records;
  std::span<const RatioPoint> points;
  const CurveSet* curves = nullptr;
  const PriorDraws* prior = nullptr;
  const PosteriorDraws* posterior = nullptr;
  int delta = 10;
  const SweepTable* sweep = nullptr;  // fig4 skipped when null
};

// Writes fig1.json .. fig4.json into `dir`; returns the file names written.
std::vector<std::string> emit_figure_data(const std::filesystem::path& dir, const FigureInputs& in);

}  // namespace lagbias
