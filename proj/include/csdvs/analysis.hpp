#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csdvs/config.hpp"
#include "csdvs/grid.hpp"
#include "csdvs/videoio.hpp"

namespace csdvs {

struct RunStats {
  int width = 0;
  int height = 0;
  std::size_t total = 0;
  std::size_t on = 0;
  std::size_t off = 0;
  std::int64_t duration_us = 0;
  double mean_rate_hz = 0.0;
  std::vector<std::size_t> per_frame_counts;
  Grid<std::size_t> per_pixel_count;
};

// Counts per frame bin: an event belongs to the last frame whose timestamp is
// <= its own (events before the first frame go to bin 0). Without frame
// timestamps per_frame_counts holds a single bin.
RunStats compute_stats(const EventStream& stream,
                       std::span<const std::int64_t> frame_timestamps_us = {});

/// Incremental counterpart of compute_stats for chunked streams.
class StatsAccumulator {
 public:
  StatsAccumulator(int width, int height, std::int64_t duration_us,
                   std::vector<std::int64_t> frame_timestamps_us = {});
  void add(std::span<const Event> chunk);
  RunStats finish() const;

 private:
  RunStats stats_;
  std::vector<std::int64_t> frames_;
};

struct RegionMask {
  std::string name;
  Mask mask;  // nonzero = inside

  // Throws ConfigError on an empty region.
  void validate() const;
};

std::size_t count_in_region(const EventStream& stream, const RegionMask& region);
std::size_t count_in_region(const RunStats& stats, const RegionMask& region);

struct RegionComparison {
  std::string name;
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  // b / a; 1.0 when both are zero, empty when only a is zero.
  std::optional<double> ratio;
};

struct ComparisonReport {
  std::size_t total_a = 0;
  std::size_t total_b = 0;
  std::optional<double> ratio;      // total_b / total_a
  std::optional<double> reduction;  // 1 - ratio
  std::vector<RegionComparison> regions;
};

std::optional<double> count_ratio(std::size_t a, std::size_t b);

ComparisonReport compare_runs(const RunStats& a, const RunStats& b,
                              std::span<const RegionMask> masks = {});

/// Fraction of the stream's events that fall inside `edge_mask` (0 for an empty stream).
double edge_localization(const EventStream& stream, const RegionMask& edge_mask);

// Disc/annulus masks around (cx, cy).
RegionMask annulus_mask(std::string name, int width, int height, double cx, double cy,
                        double inner, double outer);
RegionMask disc_mask(std::string name, int width, int height, double cx, double cy, double radius);
RegionMask outside_mask(std::string name, int width, int height, double cx, double cy,
                        double radius);
RegionMask columns_mask(std::string name, int width, int height, int x_begin, int x_end);

// stats.json document (formatted, trailing newline). Counts are exact
// integers, other numbers have 6 significant digits.
// `extra_regions` carries counts that are not mask-based (e.g. moving-bump
// attribution) and is appended to per_region.
using NamedCount = std::pair<std::string, std::size_t>;
std::string stats_json(const RunStats& stats, SensorMode mode, std::span<const RegionMask> masks,
                       const SimConfig& config, std::span<const int> solver_iterations = {},
                       std::span<const NamedCount> extra_regions = {});
std::string comparison_json(const ComparisonReport& report, const std::string& label_a,
                            const std::string& label_b);

}  // namespace csdvs
