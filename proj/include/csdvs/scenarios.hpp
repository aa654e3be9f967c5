#pragma once

#include <map>
#include <string>
#include <vector>

#include "csdvs/analysis.hpp"
#include "csdvs/stimgen.hpp"

namespace csdvs {

// Reference stimuli used by the acceptance experiments.
StimulusSpec spot_scenario();
StimulusSpec gradient_scenario();
StimulusSpec flicker_scenario();

std::string to_string(StimulusKind kind);
StimulusKind parse_stimulus_kind(const std::string& s);
std::string to_string(FlickerWaveform w);
FlickerWaveform parse_waveform(const std::string& s);

// key=value description of a generated stimulus (the flicker base image is
// not serialised; a user base is marked with base=custom).
std::string stimulus_to_text(const StimulusSpec& spec);
StimulusSpec stimulus_from_values(const std::map<std::string, std::string>& values);

// Spot:     edge_annulus  |r - R| <= 2L
//           interior      r < R - L   (omitted when empty)
//           background    r > R + 2L  (omitted when empty)
// Flicker:  uniform       x < W/2 - 3L
//           textured      x >= W/2
// Gradient: none (bumps move; see attribute_bumps).
std::vector<RegionMask> scenario_masks(const StimulusSpec& spec, double space_constant);

struct BumpCounts {
  std::size_t gradual = 0;
  std::size_t sharp = 0;
};

// Assigns each event to the bump whose centre is nearest (wrapped horizontal
// distance) at the event time, measured from the first frame.
BumpCounts attribute_bumps(const EventStream& stream, const StimulusSpec& spec,
                           std::int64_t t0_us = 0);

}  // namespace csdvs
