#include "csdvs/designcalc.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "csdvs/error.hpp"

namespace csdvs {
namespace {

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

void DesignPoint::validate() const {
  if (!positive(R) || !positive(C) || !positive(L) || !positive(U_T))
    throw ConfigError("design parameters R, C, L and U_T must be positive");
}

DesignResult evaluate(const DesignPoint& p, std::uint64_t n_pixels) {
  p.validate();
  if (n_pixels < 1) throw ConfigError("n_pixels must be >= 1");
  DesignResult r;
  r.G = 1.0 / (p.R * p.L * p.L);
  r.I_G = p.U_T * r.G;
  r.tau = p.C / r.G;
  r.f_3db = 1.0 / (2.0 * std::numbers::pi * r.tau);
  r.array_bias = static_cast<double>(n_pixels) * r.I_G;
  return r;
}

double space_constant_from_bias(double R, double I_G, double U_T) {
  if (!positive(R) || !positive(I_G) || !positive(U_T))
    throw ConfigError("R, I_G and U_T must be positive");
  return std::sqrt(U_T / (R * I_G));
}

SweepRange SweepRange::parse(const std::string& text) {
  std::vector<double> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad sweep range '" + text + "' (expected v or start:step:stop)");
    }
  }
  if (parts.size() == 1) return single(parts[0]);
  if (parts.size() != 3) throw ConfigError("bad sweep range '" + text + "' (expected start:step:stop)");
  return {parts[0], parts[1], parts[2]};
}

std::vector<double> SweepRange::values() const {
  if (!std::isfinite(start) || !std::isfinite(step) || !std::isfinite(stop))
    throw ConfigError("sweep range must be finite");
  if (start == stop) return {start};
  if (!(step > 0.0) || stop < start) throw ConfigError("sweep range needs step > 0 and stop >= start");
  double span = (stop - start) / step;
  if (span > static_cast<double>(kMaxSweepPoints)) throw ConfigError("sweep range too long");
  auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

std::vector<SweepRow> sweep(const SweepSpec& spec) {
  auto rs = spec.R.values();
  auto cs = spec.C.values();
  auto ls = spec.L.values();
  auto ns = spec.n_pixels.values();
  double total = static_cast<double>(rs.size()) * cs.size() * ls.size() * ns.size();
  if (total > static_cast<double>(kMaxSweepPoints))
    throw ConfigError("sweep has " + std::to_string(static_cast<long long>(total)) +
                      " points, limit is " + std::to_string(kMaxSweepPoints));
  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(total));
  for (double r : rs)
    for (double c : cs)
      for (double l : ls)
        for (double n : ns) {
          if (!(n >= 1.0) || n != std::floor(n)) throw ConfigError("n_pixels must be a positive integer");
          SweepRow row;
          row.point = {r, c, l, spec.U_T};
          row.n_pixels = static_cast<std::uint64_t>(n);
          row.result = evaluate(row.point, row.n_pixels);
          rows.push_back(row);
        }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "R_ohm,C_F,L_px,U_T_V,n_pixels,G_S,I_G_A,tau_s,f_3dB_Hz,array_bias_A\n";
  char line[320];
  for (const auto& row : rows) {
    const auto& p = row.point;
    const auto& r = row.result;
    std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g,%.10g,%llu,%.10g,%.10g,%.10g,%.10g,%.10g\n", p.R,
                  p.C, p.L, p.U_T, static_cast<unsigned long long>(row.n_pixels), r.G, r.I_G, r.tau,
                  r.f_3db, r.array_bias);
    out += line;
  }
  return out;
}

std::string format_design(const DesignPoint& p, std::uint64_t n_pixels, const DesignResult& r) {
  std::string out;
  char line[128];
  auto add = [&](const char* key, double v, const char* unit) {
    std::snprintf(line, sizeof(line), "%-12s %-14.6e %s\n", key, v, unit);
    out += line;
  };
  add("R", p.R, "ohm");
  add("C", p.C, "F");
  add("L", p.L, "px");
  add("U_T", p.U_T, "V");
  std::snprintf(line, sizeof(line), "%-12s %-14llu %s\n", "n_pixels",
                static_cast<unsigned long long>(n_pixels), "");
  out += line;
  add("G", r.G, "S");
  add("I_G", r.I_G, "A");
  add("tau", r.tau, "s");
  add("f_3dB", r.f_3db, "Hz");
  add("array_bias", r.array_bias, "A");
  return out;
}

}  // namespace csdvs
