#include "lagbias/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

namespace lagbias {

namespace {

constexpr std::array<std::string_view, kNumFields> kFieldNames{"chemistry", "economics", "physics",
                                                               "medicine"};
constexpr std::array<std::string_view, kNumGroups> kGroupNames{"physical", "social", "life"};

constexpr std::string_view kLaureateHeader = "year,field,n_awarded,n_female";
constexpr std::string_view kRatioHeader = "year,group,ratio";

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || s.empty()) return std::nullopt;
  return value;
}

// Reads lines, strips a trailing CR, skips trailing blank lines, checks the header.
// Calls row(fields, line_number) for each data row.
template <typename RowFn>
void read_csv(std::istream& in, const std::string& source, std::string_view header,
              std::size_t n_columns, RowFn&& row) {
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!seen_header) {
      if (line != header) {
        throw DataError(source, line_no,
                        "expected header '" + std::string(header) + "', got '" + line + "'");
      }
      seen_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto cols = split_commas(line);
    if (cols.size() != n_columns) {
      throw DataError(source, line_no,
                      "expected " + std::to_string(n_columns) + " columns, got " +
                          std::to_string(cols.size()));
    }
    row(cols, line_no);
  }
  if (!seen_header) throw DataError(source, 0, "missing header line");
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string(), 0, "cannot open file");
  return in;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

DataError::DataError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what
                                  : source + ": " + what),
      source_(source),
      line_(line) {}

std::string_view to_string(Field f) noexcept { return kFieldNames[index_of(f)]; }
std::string_view to_string(RatioGroup g) noexcept { return kGroupNames[index_of(g)]; }

std::optional<Field> parse_field(std::string_view s) noexcept {
  for (auto f : kFields)
    if (kFieldNames[index_of(f)] == s) return f;
  return std::nullopt;
}

std::optional<RatioGroup> parse_group(std::string_view s) noexcept {
  for (auto g : kGroups)
    if (kGroupNames[index_of(g)] == s) return g;
  return std::nullopt;
}

std::vector<LaureateRecord> parse_laureates(std::istream& in, const std::string& source) {
  std::vector<LaureateRecord> records;
  std::map<std::pair<int, Field>, std::size_t> seen;  // key -> line

  read_csv(in, source, kLaureateHeader, 4, [&](const auto& cols, std::size_t line_no) {
    const auto year = parse_number<int>(cols[0]);
    const auto field = parse_field(cols[1]);
    const auto awarded = parse_number<int>(cols[2]);
    const auto female = parse_number<int>(cols[3]);
    if (!year) throw DataError(source, line_no, "bad year '" + std::string(cols[0]) + "'");
    if (!field) throw DataError(source, line_no, "unknown field '" + std::string(cols[1]) + "'");
    if (!awarded || *awarded < 0)
      throw DataError(source, line_no, "bad n_awarded '" + std::string(cols[2]) + "'");
    if (!female || *female < 0)
      throw DataError(source, line_no, "bad n_female '" + std::string(cols[3]) + "'");
    if (*female > *awarded)
      throw DataError(source, line_no,
                      "n_female (" + std::to_string(*female) + ") exceeds n_awarded (" +
                          std::to_string(*awarded) + ")");
    const auto [it, inserted] = seen.emplace(std::pair{*year, *field}, line_no);
    if (!inserted) {
      throw DataError(source, line_no,
                      "duplicate (year, field) = (" + std::to_string(*year) + ", " +
                          std::string(to_string(*field)) + "), first seen on line " +
                          std::to_string(it->second));
    }
    records.push_back({*year, *field, *awarded, *female});
  });

  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::pair{index_of(a.field), a.year} < std::pair{index_of(b.field), b.year};
  });
  return records;
}

std::vector<LaureateRecord> load_laureates(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_laureates(in, path.string());
}

std::vector<RatioPoint> parse_ratios(std::istream& in, const std::string& source) {
  std::vector<RatioPoint> points;
  std::map<std::pair<int, RatioGroup>, std::size_t> seen;

  read_csv(in, source, kRatioHeader, 3, [&](const auto& cols, std::size_t line_no) {
    const auto year = parse_number<int>(cols[0]);
    const auto group = parse_group(cols[1]);
    const auto ratio = parse_number<double>(cols[2]);
    if (!year) throw DataError(source, line_no, "bad year '" + std::string(cols[0]) + "'");
    if (!group) throw DataError(source, line_no, "unknown group '" + std::string(cols[1]) + "'");
    if (!ratio) throw DataError(source, line_no, "bad ratio '" + std::string(cols[2]) + "'");
    if (!(*ratio > 0.0 && *ratio < 1.0))
      throw DataError(source, line_no,
                      "ratio " + std::string(cols[2]) + " outside the open interval (0, 1)");
    const auto [it, inserted] = seen.emplace(std::pair{*year, *group}, line_no);
    if (!inserted) {
      throw DataError(source, line_no,
                      "duplicate (year, group) = (" + std::to_string(*year) + ", " +
                          std::string(to_string(*group)) + "), first seen on line " +
                          std::to_string(it->second));
    }
    points.push_back({*year, *group, *ratio});
  });

  std::array<std::size_t, kNumGroups> counts{};
  for (const auto& p : points) ++counts[index_of(p.group)];
  for (auto g : kGroups) {
    if (counts[index_of(g)] < kMinPointsPerGroup) {
      throw DataError(source, 0,
                      "group '" + std::string(to_string(g)) + "' has " +
                          std::to_string(counts[index_of(g)]) + " points; at least " +
                          std::to_string(kMinPointsPerGroup) + " are needed for a logistic fit");
    }
  }

  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return std::pair{index_of(a.group), a.year} < std::pair{index_of(b.group), b.year};
  });
  return points;
}

std::vector<RatioPoint> load_ratios(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_ratios(in, path.string());
}

void write_laureates(std::ostream& out, std::span<const LaureateRecord> records) {
  std::vector<LaureateRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::pair{a.year, index_of(a.field)} < std::pair{b.year, index_of(b.field)};
  });
  out << kLaureateHeader << '\n';
  for (const auto& r : sorted) {
    out << r.year << ',' << to_string(r.field) << ',' << r.n_awarded << ',' << r.n_female << '\n';
  }
}

void write_ratios(std::ostream& out, std::span<const RatioPoint> points) {
  std::vector<RatioPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::pair{index_of(a.group), a.year} < std::pair{index_of(b.group), b.year};
  });
  out << kRatioHeader << '\n';
  for (const auto& p : sorted) {
    out << p.year << ',' << to_string(p.group) << ',' << format_double(p.ratio) << '\n';
  }
}

DatasetSummary summarize(std::span<const LaureateRecord> records) {
  DatasetSummary s;
  for (const auto& r : records) {
    auto& t = s.per_field[index_of(r.field)];
    t.awarded += r.n_awarded;
    t.female += r.n_female;
  }
  for (const auto& t : s.per_field) {
    s.total.awarded += t.awarded;
    s.total.female += t.female;
  }
  return s;
}

std::vector<RatioPoint> points_for(std::span<const RatioPoint> points, RatioGroup group) {
  std::vector<RatioPoint> out;
  std::copy_if(points.begin(), points.end(), std::back_inserter(out),
               [group](const auto& p) { return p.group == group; });
  return out;
}

std::vector<LaureateRecord> records_for(std::span<const LaureateRecord> records, Field field) {
  std::vector<LaureateRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [field](const auto& r) { return r.field == field; });
  return out;
}

}  // namespace lagbias
