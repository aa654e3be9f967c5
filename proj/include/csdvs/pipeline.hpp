#pragma once

#include <cstdint>
#include <vector>

#include "csdvs/config.hpp"
#include "csdvs/videoio.hpp"

namespace csdvs {

struct PipelineResult {
  EventStream stream;
  std::vector<std::size_t> per_frame_counts;  // events emitted while processing frame k
  std::vector<int> solver_iterations;         // per frame; empty in DVS mode
  double solve_seconds = 0.0;                 // wall time spent in the surround
};

// log transform -> photoreceptor -> (CSDVS: diff = v_p - v_h, DVS: diff = v_p)
// -> detector, over every frame. The threshold map comes from config.seed, so
// DVS and CSDVS runs with the same config share identical thresholds.
PipelineResult run_pipeline(const FrameSequence& frames, const SimConfig& config,
                            SensorMode mode);

}  // namespace csdvs
