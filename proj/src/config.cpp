#include "csdvs/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csdvs/error.hpp"

namespace csdvs {
namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number for '" + key + "': '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    unsigned long long n = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for '" + key + "': '" + v + "'");
  }
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Dvs: return "dvs";
    case RunMode::Csdvs: return "csdvs";
    case RunMode::Both: return "both";
  }
  return "?";
}

std::string to_string(SensorMode mode) { return mode == SensorMode::Dvs ? "dvs" : "csdvs"; }

std::string to_string(ResetMode mode) { return mode == ResetMode::Ladder ? "ladder" : "snapshot"; }

std::string to_string(EventFormat format) { return format == EventFormat::Csv ? "csv" : "bin"; }

RunMode parse_run_mode(const std::string& s) {
  if (s == "dvs") return RunMode::Dvs;
  if (s == "csdvs") return RunMode::Csdvs;
  if (s == "both") return RunMode::Both;
  throw ConfigError("mode must be dvs, csdvs or both (got '" + s + "')");
}

ResetMode parse_reset_mode(const std::string& s) {
  if (s == "ladder") return ResetMode::Ladder;
  if (s == "snapshot") return ResetMode::Snapshot;
  throw ConfigError("reset_mode must be ladder or snapshot (got '" + s + "')");
}

EventFormat parse_event_format(const std::string& s) {
  if (s == "csv") return EventFormat::Csv;
  if (s == "bin") return EventFormat::Bin;
  throw ConfigError("format must be csv or bin (got '" + s + "')");
}

void SimConfig::validate() const {
  if (!(space_constant > 0.0) || !std::isfinite(space_constant))
    throw ConfigError("L must be positive");
  if (!(tau_us >= 0.0) || !std::isfinite(tau_us)) throw ConfigError("tau_us must be >= 0");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("theta must be positive");
  if (!(theta_sigma >= 0.0) || !std::isfinite(theta_sigma))
    throw ConfigError("theta_sigma must be >= 0");
  if (!(pr_cutoff_hz >= 0.0) || !std::isfinite(pr_cutoff_hz))
    throw ConfigError("pr_cutoff_hz must be >= 0 (0 = bypass)");
  if (!(solver_tol > 0.0)) throw ConfigError("solver_tol must be positive");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw ConfigError("fps must be positive");
}

std::string SimConfig::to_text() const {
  std::ostringstream out;
  out << "mode=" << to_string(mode) << "\n"
      << "L=" << full(space_constant) << "\n"
      << "tau_us=" << full(tau_us) << "\n"
      << "theta=" << full(theta) << "\n"
      << "theta_sigma=" << full(theta_sigma) << "\n"
      << "pr_cutoff_hz=" << full(pr_cutoff_hz) << "\n"
      << "seed=" << seed << "\n"
      << "solver_tol=" << full(solver_tol) << "\n"
      << "reset_mode=" << to_string(reset_mode) << "\n"
      << "input=" << input << "\n"
      << "fps=" << full(fps) << "\n"
      << "output=" << output << "\n"
      << "format=" << to_string(format) << "\n";
  return out.str();
}

void SimConfig::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [key, v] : values) {
    if (key == "mode") mode = parse_run_mode(v);
    else if (key == "L") space_constant = parse_double(key, v);
    else if (key == "tau_us") tau_us = parse_double(key, v);
    else if (key == "theta") theta = parse_double(key, v);
    else if (key == "theta_sigma") theta_sigma = parse_double(key, v);
    else if (key == "pr_cutoff_hz") pr_cutoff_hz = parse_double(key, v);
    else if (key == "seed") seed = parse_u64(key, v);
    else if (key == "solver_tol") solver_tol = parse_double(key, v);
    else if (key == "reset_mode") reset_mode = parse_reset_mode(v);
    else if (key == "input") input = v;
    else if (key == "fps") fps = parse_double(key, v);
    else if (key == "output") output = v;
    else if (key == "format") format = parse_event_format(v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

}  // namespace csdvs
