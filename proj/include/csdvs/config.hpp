#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "csdvs/detector.hpp"
#include "csdvs/videoio.hpp"

namespace csdvs {

enum class SensorMode { Dvs, Csdvs };
enum class RunMode { Dvs, Csdvs, Both };

/// Every user-facing simulation parameter. Defaults reproduce the reference
/// configuration: theta 0.2 +- 0.02, 100 Hz photoreceptor, L = 10 px,
/// quasi-static surround (tau_us = 2000 gives the 2 ms transient surround).
struct SimConfig {
  RunMode mode = RunMode::Both;
  double space_constant = 10.0;  // px
  double tau_us = 0.0;           // 0 = quasi-static
  double theta = 0.2;
  double theta_sigma = 0.02;
  double pr_cutoff_hz = 100.0;   // 0 = bypass
  std::uint64_t seed = 1;
  double solver_tol = 1e-8;
  ResetMode reset_mode = ResetMode::Ladder;
  std::string input;
  double fps = 500.0;
  std::string output = "out";
  EventFormat format = EventFormat::Csv;

  void validate() const;

  /// key=value lines, one per field, full precision. Parses back to an
  /// identical config.
  std::string to_text() const;

  // Applies key=value pairs on top of the current values. Unknown keys and
  // malformed values throw ConfigError.
  void apply(const std::map<std::string, std::string>& values);
};

// Reads a key=value file ('#' comments, blank lines ignored).
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
std::map<std::string, std::string> parse_key_values(const std::string& text);

std::string to_string(RunMode mode);
std::string to_string(SensorMode mode);
std::string to_string(ResetMode mode);
std::string to_string(EventFormat format);
RunMode parse_run_mode(const std::string& s);
ResetMode parse_reset_mode(const std::string& s);
EventFormat parse_event_format(const std::string& s);

}  // namespace csdvs
