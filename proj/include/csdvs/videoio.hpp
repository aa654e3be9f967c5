#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "csdvs/grid.hpp"

namespace csdvs {

/// Grayscale frames with luminance in [0, 1] and integer microsecond
/// timestamps.
struct FrameSequence {
  int width = 0;
  int height = 0;
  std::vector<PixelGrid> frames;
  std::vector<std::int64_t> timestamps_us;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }

  // Throws FormatError on mixed sizes, out-of-range luminance or
  // non-increasing timestamps.
  void validate() const;
};

/// k/fps in integer microseconds (rounded to nearest).
std::int64_t frame_timestamp_us(std::size_t k, double fps);

enum class Polarity : std::int8_t { Off = -1, On = 1 };

struct Event {
  std::int64_t t_us = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Polarity polarity = Polarity::On;

  // Stream order: timestamp, then row, then column, then polarity.
  friend auto operator<=>(const Event& a, const Event& b) {
    if (auto c = a.t_us <=> b.t_us; c != 0) return c;
    if (auto c = a.y <=> b.y; c != 0) return c;
    if (auto c = a.x <=> b.x; c != 0) return c;
    return static_cast<int>(a.polarity) <=> static_cast<int>(b.polarity);
  }
  friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
  int width = 0;
  int height = 0;
  std::int64_t duration_us = 0;
  std::vector<Event> events;

  void validate() const;
};

enum class EventFormat { Csv, Bin };

EventFormat event_format_from_path(const std::filesystem::path& path);

// Frame input: a directory of lexicographically ordered binary PGM (P5)
// files with an optional timestamps.txt, or a single file holding one or more
// concatenated P5 images.
FrameSequence load_frames(const std::filesystem::path& path, double fps);

// Writes frame_NNNNNN.pgm files plus timestamps.txt into `dir`.
void save_frames(const FrameSequence& frames, const std::filesystem::path& dir);

PixelGrid read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& image);

/// Additive floor inside the log so that black pixels stay finite.
inline constexpr double kLogOffset = 0.02;

/// ln(luminance + kLogOffset), per pixel.
PixelGrid log_transform(const PixelGrid& frame);

void write_events(const EventStream& stream, const std::filesystem::path& path,
                  EventFormat format);
void write_events(const EventStream& stream, const std::filesystem::path& path);

// CSV files carry no geometry; width/height are taken from the arguments
// (BIN files use their header and ignore them). duration_us is set to the last
// timestamp.
EventStream read_events(const std::filesystem::path& path, EventFormat format, int width = 0,
                        int height = 0);

// One 8-bit PGM per window of `window_us`: 128 + 32 * clamp(ON - OFF, -3, 3).
// Returns the number of images written.
std::size_t render_accumulation(const EventStream& stream, std::int64_t window_us,
                                const std::filesystem::path& out_dir);

// In-memory form of the accumulation images, one per window.
std::vector<Grid<std::uint8_t>> accumulate_windows(const EventStream& stream,
                                                   std::int64_t window_us);

}  // namespace csdvs
