#pragma once
// Input datasets: Nobel laureate counts per (year, field) and senior-faculty
// gender ratios per (year, discipline group).

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lagbias {

enum class Field { Chemistry = 0, Economics = 1, Physics = 2, Medicine = 3 };

inline constexpr std::size_t kNumFields = 4;
inline constexpr std::array<Field, kNumFields> kFields{
    Field::Chemistry, Field::Economics, Field::Physics, Field::Medicine};

enum class RatioGroup { PhysicalSciences = 0, SocialSciences = 1, LifeSciences = 2 };

inline constexpr std::size_t kNumGroups = 3;
inline constexpr std::array<RatioGroup, kNumGroups> kGroups{
    RatioGroup::PhysicalSciences, RatioGroup::SocialSciences, RatioGroup::LifeSciences};

// Chemistry and Physics share the physical-sciences ratio; Economics uses
// social sciences; Medicine uses life sciences.
constexpr RatioGroup group_of(Field f) noexcept {
  switch (f) {
    case Field::Chemistry:
    case Field::Physics:
      return RatioGroup::PhysicalSciences;
    case Field::Economics:
      return RatioGroup::SocialSciences;
    case Field::Medicine:
      return RatioGroup::LifeSciences;
  }
  return RatioGroup::PhysicalSciences;
}

constexpr std::size_t index_of(Field f) noexcept { return static_cast<std::size_t>(f); }
constexpr std::size_t index_of(RatioGroup g) noexcept { return static_cast<std::size_t>(g); }

// Lowercase names as they appear in the CSV files.
std::string_view to_string(Field f) noexcept;
std::string_view to_string(RatioGroup g) noexcept;
std::optional<Field> parse_field(std::string_view s) noexcept;
std::optional<RatioGroup> parse_group(std::string_view s) noexcept;

struct LaureateRecord {
  int year = 0;
  Field field = Field::Chemistry;
  int n_awarded = 0;
  int n_female = 0;

  friend bool operator==(const LaureateRecord&, const LaureateRecord&) = default;
};

struct RatioPoint {
  int year = 0;
  RatioGroup group = RatioGroup::PhysicalSciences;
  double ratio = 0.0;

  friend bool operator==(const RatioPoint&, const RatioPoint&) = default;
};

struct FieldTotals {
  int awarded = 0;
  int female = 0;
  int male() const noexcept { return awarded - female; }
};

struct DatasetSummary {
  std::array<FieldTotals, kNumFields> per_field{};
  FieldTotals total{};

  const FieldTotals& operator[](Field f) const noexcept { return per_field[index_of(f)]; }
};

// Thrown for malformed or invariant-violating input. `line` is 1-based and
// counts the header as line 1; zero when the error is not tied to a row.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& source, std::size_t line, const std::string& what);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// Records come back sorted by (field, year).
std::vector<LaureateRecord> parse_laureates(std::istream& in, const std::string& source = "<stream>");
std::vector<LaureateRecord> load_laureates(const std::filesystem::path& path);

// Points come back sorted by (group, year). Every group needs at least
// kMinPointsPerGroup points.
inline constexpr std::size_t kMinPointsPerGroup = 4;
std::vector<RatioPoint> parse_ratios(std::istream& in, const std::string& source = "<stream>");
std::vector<RatioPoint> load_ratios(const std::filesystem::path& path);

// Canonical CSV form (header, LF endings, sorted rows).
void write_laureates(std::ostream& out, std::span<const LaureateRecord> records);
void write_ratios(std::ostream& out, std::span<const RatioPoint> points);

DatasetSummary summarize(std::span<const LaureateRecord> records);

std::vector<RatioPoint> points_for(std::span<const RatioPoint> points, RatioGroup group);
std::vector<LaureateRecord> records_for(std::span<const LaureateRecord> records, Field field);

}  // namespace lagbias
