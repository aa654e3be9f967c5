#include "csdvs/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <optional>

#include "csdvs/detector.hpp"
#include "csdvs/error.hpp"
#include "csdvs/photoreceptor.hpp"
#include "csdvs/surround.hpp"

namespace csdvs {

PipelineResult run_pipeline(const FrameSequence& frames, const SimConfig& config, SensorMode mode) {
  config.validate();
  frames.validate();

  PipelineResult result;
  result.stream.width = frames.width;
  result.stream.height = frames.height;
  if (frames.empty()) return result;
  result.stream.duration_us = frames.timestamps_us.back() - frames.timestamps_us.front();

  const PixelGrid first = log_transform(frames.frames.front());
  Photoreceptor pr = config.pr_cutoff_hz > 0.0 ? Photoreceptor(first, config.pr_cutoff_hz)
                                               : Photoreceptor::bypass(first);

  using clock = std::chrono::steady_clock;
  std::optional<Surround> surround;
  if (mode == SensorMode::Csdvs) {
    MeshParams mesh{config.space_constant, config.tau_us * 1e-6};
    SolverOptions opts;
    opts.tolerance = config.solver_tol;
    auto t0 = clock::now();
    surround.emplace(pr.output(), mesh, opts);
    result.solve_seconds += std::chrono::duration<double>(clock::now() - t0).count();
    result.solver_iterations.push_back(surround->last_report().iterations);
  }

  auto difference = [&]() {
    if (!surround) return pr.output();
    PixelGrid d = pr.output();
    const PixelGrid& v_h = surround->field();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= v_h[i];
    return d;
  };

  const ThresholdMap thresholds = ThresholdMap::generate(frames.width, frames.height, config.theta,
                                                         config.theta_sigma, config.seed);
  DetectorState detector = DetectorState::init(difference(), frames.timestamps_us.front());
  result.per_frame_counts.push_back(0);

  auto& events = result.stream.events;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const double dt = static_cast<double>(frames.timestamps_us[k] - frames.timestamps_us[k - 1]) * 1e-6;
    pr.step(log_transform(frames.frames[k]), dt);
    if (surround) {
      auto t0 = clock::now();
      surround->update(pr.output(), dt);
      result.solve_seconds += std::chrono::duration<double>(clock::now() - t0).count();
      result.solver_iterations.push_back(surround->last_report().iterations);
    }
    auto batch = detect_frame(detector, difference(), frames.timestamps_us[k], thresholds,
                              config.reset_mode);
    result.per_frame_counts.push_back(batch.size());

    // Events stamped exactly at the previous frame time can interleave with
    // the tail of the stream; merge to keep the global order.
    auto old_size = static_cast<std::ptrdiff_t>(events.size());
    events.insert(events.end(), batch.begin(), batch.end());
    if (old_size > 0 && !batch.empty() && batch.front() < events[static_cast<std::size_t>(old_size - 1)]) {
      auto tail = std::lower_bound(events.begin(), events.begin() + old_size, batch.front());
      std::inplace_merge(tail, events.begin() + old_size, events.end());
    }
  }
  return result;
}

}  // namespace csdvs
