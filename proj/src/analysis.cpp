#include "csdvs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "csdvs/error.hpp"

namespace csdvs {
namespace {

using json = nlohmann::ordered_json;

std::size_t frame_bin(std::span<const std::int64_t> frames, std::int64_t t) {
  if (frames.empty()) return 0;
  auto it = std::upper_bound(frames.begin(), frames.end(), t);
  if (it == frames.begin()) return 0;
  return static_cast<std::size_t>(it - frames.begin() - 1);
}

double rate(std::size_t total, std::int64_t duration_us) {
  return duration_us > 0 ? static_cast<double>(total) / (static_cast<double>(duration_us) * 1e-6) : 0.0;
}

// Rounds to 6 significant digits; JSON then prints the shortest round-trip
// form of that value.
double sig6(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::strtod(buf, nullptr);
}

json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  return sig6(*v);
}

}  // namespace

RunStats compute_stats(const EventStream& stream, std::span<const std::int64_t> frame_timestamps_us) {
  RunStats s;
  s.width = stream.width;
  s.height = stream.height;
  s.duration_us = stream.duration_us;
  s.total = stream.events.size();
  s.on = static_cast<std::size_t>(std::count_if(stream.events.begin(), stream.events.end(),
                                                [](const Event& e) { return e.polarity == Polarity::On; }));
  s.off = s.total - s.on;
  s.mean_rate_hz = rate(s.total, s.duration_us);
  s.per_frame_counts.assign(std::max<std::size_t>(1, frame_timestamps_us.size()), 0);
  s.per_pixel_count = Grid<std::size_t>(stream.width, stream.height);
  for (const Event& e : stream.events) {
    if (e.x >= stream.width || e.y >= stream.height) throw FormatError("event outside the sensor");
    ++s.per_frame_counts[frame_bin(frame_timestamps_us, e.t_us)];
    ++s.per_pixel_count(e.x, e.y);
  }
  return s;
}

StatsAccumulator::StatsAccumulator(int width, int height, std::int64_t duration_us,
                                   std::vector<std::int64_t> frame_timestamps_us)
    : frames_(std::move(frame_timestamps_us)) {
  stats_.width = width;
  stats_.height = height;
  stats_.duration_us = duration_us;
  stats_.per_frame_counts.assign(std::max<std::size_t>(1, frames_.size()), 0);
  stats_.per_pixel_count = Grid<std::size_t>(width, height);
}

void StatsAccumulator::add(std::span<const Event> chunk) {
  for (const Event& e : chunk) {
    if (e.x >= stats_.width || e.y >= stats_.height) throw FormatError("event outside the sensor");
    ++stats_.total;
    if (e.polarity == Polarity::On) ++stats_.on;
    else ++stats_.off;
    ++stats_.per_frame_counts[frame_bin(frames_, e.t_us)];
    ++stats_.per_pixel_count(e.x, e.y);
  }
}

RunStats StatsAccumulator::finish() const {
  RunStats s = stats_;
  s.mean_rate_hz = rate(s.total, s.duration_us);
  return s;
}

void RegionMask::validate() const {
  if (std::none_of(mask.begin(), mask.end(), [](unsigned char v) { return v != 0; }))
    throw ConfigError("region '" + name + "' is empty");
}

std::size_t count_in_region(const EventStream& stream, const RegionMask& region) {
  if (region.mask.width() != stream.width || region.mask.height() != stream.height)
    throw ConfigError("region '" + region.name + "' does not match the sensor size");
  return static_cast<std::size_t>(std::count_if(stream.events.begin(), stream.events.end(),
                                                [&](const Event& e) { return region.mask(e.x, e.y) != 0; }));
}

std::size_t count_in_region(const RunStats& stats, const RegionMask& region) {
  if (!region.mask.same_shape(stats.per_pixel_count))
    throw ConfigError("region '" + region.name + "' does not match the sensor size");
  std::size_t n = 0;
  for (std::size_t i = 0; i < region.mask.size(); ++i)
    if (region.mask[i]) n += stats.per_pixel_count[i];
  return n;
}

std::optional<double> count_ratio(std::size_t a, std::size_t b) {
  if (a == 0) return b == 0 ? std::optional<double>(1.0) : std::nullopt;
  return static_cast<double>(b) / static_cast<double>(a);
}

ComparisonReport compare_runs(const RunStats& a, const RunStats& b, std::span<const RegionMask> masks) {
  if (a.width != b.width || a.height != b.height)
    throw ConfigError("cannot compare runs with different sensor geometry");
  ComparisonReport report;
  report.total_a = a.total;
  report.total_b = b.total;
  report.ratio = count_ratio(a.total, b.total);
  if (report.ratio) report.reduction = 1.0 - *report.ratio;
  for (const RegionMask& m : masks) {
    m.validate();
    RegionComparison rc;
    rc.name = m.name;
    rc.count_a = count_in_region(a, m);
    rc.count_b = count_in_region(b, m);
    rc.ratio = count_ratio(rc.count_a, rc.count_b);
    report.regions.push_back(std::move(rc));
  }
  return report;
}

double edge_localization(const EventStream& stream, const RegionMask& edge_mask) {
  if (stream.events.empty()) return 0.0;
  return static_cast<double>(count_in_region(stream, edge_mask)) /
         static_cast<double>(stream.events.size());
}

RegionMask annulus_mask(std::string name, int width, int height, double cx, double cy, double inner,
                        double outer) {
  RegionMask m{std::move(name), Mask(width, height)};
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double r = std::hypot(x - cx, y - cy);
      m.mask(x, y) = (r >= inner && r <= outer) ? 1 : 0;
    }
  return m;
}

RegionMask disc_mask(std::string name, int width, int height, double cx, double cy, double radius) {
  RegionMask m{std::move(name), Mask(width, height)};
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.mask(x, y) = std::hypot(x - cx, y - cy) < radius ? 1 : 0;
  return m;
}

RegionMask outside_mask(std::string name, int width, int height, double cx, double cy, double radius) {
  RegionMask m{std::move(name), Mask(width, height)};
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.mask(x, y) = std::hypot(x - cx, y - cy) > radius ? 1 : 0;
  return m;
}

RegionMask columns_mask(std::string name, int width, int height, int x_begin, int x_end) {
  RegionMask m{std::move(name), Mask(width, height)};
  for (int y = 0; y < height; ++y)
    for (int x = std::max(0, x_begin); x < std::min(width, x_end); ++x) m.mask(x, y) = 1;
  return m;
}

std::string stats_json(const RunStats& stats, SensorMode mode, std::span<const RegionMask> masks,
                       const SimConfig& config, std::span<const int> solver_iterations,
                       std::span<const NamedCount> extra_regions) {
  json doc;
  doc["mode"] = to_string(mode);
  doc["total"] = stats.total;
  doc["on"] = stats.on;
  doc["off"] = stats.off;
  doc["duration_us"] = stats.duration_us;
  doc["mean_rate_hz"] = sig6(stats.mean_rate_hz);
  json regions = json::object();
  for (const RegionMask& m : masks) regions[m.name] = count_in_region(stats, m);
  for (const auto& [name, n] : extra_regions) regions[name] = n;
  doc["per_region"] = regions;
  json params;
  params["mode"] = to_string(config.mode);
  params["L"] = sig6(config.space_constant);
  params["tau_us"] = sig6(config.tau_us);
  params["theta"] = sig6(config.theta);
  params["theta_sigma"] = sig6(config.theta_sigma);
  params["pr_cutoff_hz"] = sig6(config.pr_cutoff_hz);
  params["seed"] = config.seed;
  params["solver_tol"] = sig6(config.solver_tol);
  params["reset_mode"] = to_string(config.reset_mode);
  params["input"] = config.input;
  params["fps"] = sig6(config.fps);
  params["output"] = config.output;
  params["format"] = to_string(config.format);
  doc["params"] = params;
  if (!solver_iterations.empty()) {
    long long sum = std::accumulate(solver_iterations.begin(), solver_iterations.end(), 0LL);
    doc["solver"] = {{"solves", solver_iterations.size()},
                     {"total_iterations", sum},
                     {"max_iterations", *std::max_element(solver_iterations.begin(), solver_iterations.end())}};
  }
  return doc.dump(2) + "\n";
}

std::string comparison_json(const ComparisonReport& report, const std::string& label_a,
                            const std::string& label_b) {
  json doc;
  doc["a"] = label_a;
  doc["b"] = label_b;
  doc["total_a"] = report.total_a;
  doc["total_b"] = report.total_b;
  doc["ratio"] = optional_number(report.ratio);
  doc["reduction"] = optional_number(report.reduction);
  json regions = json::object();
  for (const auto& r : report.regions)
    regions[r.name] = {{"a", r.count_a}, {"b", r.count_b}, {"ratio", optional_number(r.ratio)}};
  doc["per_region"] = regions;
  return doc.dump(2) + "\n";
}

}  // namespace csdvs
