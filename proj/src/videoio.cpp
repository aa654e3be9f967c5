#include "csdvs/videoio.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "csdvs/error.hpp"

namespace csdvs {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kBinMagic{'C', 'S', 'D', 'V'};
constexpr std::uint16_t kBinVersion = 1;
constexpr std::size_t kBinHeaderSize = 16;
constexpr std::size_t kBinRecordSize = 13;

std::string describe(const fs::path& path) { return "'" + path.string() + "'"; }

// Reads one whitespace/comment-delimited header token of a PGM.
bool read_token(std::istream& in, std::string& token) {
  token.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  // The single whitespace byte after maxval has been consumed, as required.
  return !token.empty();
}

int parse_header_int(std::istream& in, const fs::path& path, const char* what) {
  std::string token;
  if (!read_token(in, token)) throw FormatError("PGM " + describe(path) + ": missing " + what);
  try {
    std::size_t used = 0;
    int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw FormatError("PGM " + describe(path) + ": bad " + what + " '" + token + "'");
  }
}

// Returns false at clean end of input.
bool read_pgm_image(std::istream& in, const fs::path& path, PixelGrid& out) {
  std::string magic;
  if (!read_token(in, magic)) return false;
  if (magic != "P5") throw FormatError("PGM " + describe(path) + ": expected P5, got '" + magic + "'");
  int width = parse_header_int(in, path, "width");
  int height = parse_header_int(in, path, "height");
  int maxval = parse_header_int(in, path, "maxval");
  if (width <= 0 || height <= 0) throw FormatError("PGM " + describe(path) + ": empty image");
  if (maxval <= 0 || maxval > 255)
    throw FormatError("PGM " + describe(path) + ": only 8-bit images are supported");
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw FormatError("PGM " + describe(path) + ": truncated pixel data");
  out = PixelGrid(width, height);
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<double>(raw[i]) / maxval;
  return true;
}

std::vector<std::int64_t> read_timestamps(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + describe(path));
  std::vector<std::int64_t> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(std::stoll(line));
    } catch (const std::exception&) {
      throw FormatError(describe(path) + ": bad timestamp '" + line + "'");
    }
  }
  return out;
}

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + describe(path) + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + describe(path));
}

}  // namespace

std::int64_t frame_timestamp_us(std::size_t k, double fps) {
  return std::llround(static_cast<double>(k) * 1e6 / fps);
}

void FrameSequence::validate() const {
  if (frames.size() != timestamps_us.size())
    throw FormatError("frame sequence has " + std::to_string(frames.size()) + " frames but " +
                      std::to_string(timestamps_us.size()) + " timestamps");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    if (f.width() != width || f.height() != height)
      throw FormatError("frame " + std::to_string(k) + " is " + std::to_string(f.width()) + "x" +
                        std::to_string(f.height()) + ", expected " + std::to_string(width) + "x" +
                        std::to_string(height));
    for (double v : f)
      if (!(v >= 0.0 && v <= 1.0))
        throw FormatError("frame " + std::to_string(k) + " has luminance outside [0,1]");
    if (k > 0 && timestamps_us[k] <= timestamps_us[k - 1])
      throw FormatError("timestamps must be strictly increasing (frame " + std::to_string(k) + ")");
  }
}

void EventStream::validate() const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.x >= width || e.y >= height)
      throw FormatError("event " + std::to_string(i) + " outside the sensor");
    if (e.polarity != Polarity::On && e.polarity != Polarity::Off)
      throw FormatError("event " + std::to_string(i) + " has invalid polarity");
    if (i > 0 && e.t_us < events[i - 1].t_us)
      throw FormatError("event timestamps decrease at index " + std::to_string(i));
  }
}

EventFormat event_format_from_path(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".csv") return EventFormat::Csv;
  if (ext == ".bin") return EventFormat::Bin;
  throw ConfigError("cannot infer event format from " + describe(path) + " (use .csv or .bin)");
}

PixelGrid read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + describe(path));
  PixelGrid out;
  if (!read_pgm_image(in, path, out)) throw FormatError("PGM " + describe(path) + " is empty");
  return out;
}

void write_pgm(const fs::path& path, const Grid<std::uint8_t>& image) {
  std::string bytes = "P5\n" + std::to_string(image.width()) + " " +
                      std::to_string(image.height()) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(image.values().data()), image.size());
  write_file(path, bytes);
}

FrameSequence load_frames(const fs::path& path, double fps) {
  FrameSequence seq;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (ext == ".pgm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) seq.frames.push_back(read_pgm(f));
    if (fs::exists(path / "timestamps.txt")) seq.timestamps_us = read_timestamps(path / "timestamps.txt");
  } else if (fs::is_regular_file(path, ec)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + describe(path));
    PixelGrid frame;
    while (read_pgm_image(in, path, frame)) seq.frames.push_back(std::move(frame));
  } else {
    throw IoError("no such frame source " + describe(path));
  }

  if (!seq.frames.empty()) {
    seq.width = seq.frames.front().width();
    seq.height = seq.frames.front().height();
  }
  if (seq.timestamps_us.empty()) {
    if (!(fps > 0.0)) throw ConfigError("fps must be positive when no timestamps.txt is given");
    for (std::size_t k = 0; k < seq.frames.size(); ++k)
      seq.timestamps_us.push_back(frame_timestamp_us(k, fps));
  }
  seq.validate();
  return seq;
}

void save_frames(const FrameSequence& seq, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + describe(dir) + ": " + ec.message());
  std::string stamps;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const PixelGrid& f = seq.frames[k];
    Grid<std::uint8_t> img(f.width(), f.height());
    for (std::size_t i = 0; i < f.size(); ++i)
      img[i] = static_cast<std::uint8_t>(std::lround(std::clamp(f[i], 0.0, 1.0) * 255.0));
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.pgm", k);
    write_pgm(dir / name, img);
    stamps += std::to_string(seq.timestamps_us[k]) + "\n";
  }
  write_file(dir / "timestamps.txt", stamps);
}

PixelGrid log_transform(const PixelGrid& frame) {
  PixelGrid out(frame.width(), frame.height());
  for (std::size_t i = 0; i < frame.size(); ++i) out[i] = std::log(frame[i] + kLogOffset);
  return out;
}

void write_events(const EventStream& stream, const fs::path& path, EventFormat format) {
  std::string buf;
  if (format == EventFormat::Csv) {
    buf.reserve(16 + stream.events.size() * 20);
    buf += "t_us,x,y,p\n";
    char line[64];
    for (const Event& e : stream.events) {
      int n = std::snprintf(line, sizeof(line), "%lld,%u,%u,%d\n", static_cast<long long>(e.t_us),
                            static_cast<unsigned>(e.x), static_cast<unsigned>(e.y),
                            static_cast<int>(e.polarity));
      buf.append(line, static_cast<std::size_t>(n));
    }
  } else {
    if (stream.width > 0xffff || stream.height > 0xffff)
      throw ConfigError("sensor too large for the binary event format");
    buf.reserve(kBinHeaderSize + stream.events.size() * kBinRecordSize);
    buf.append(kBinMagic.data(), kBinMagic.size());
    put_u16(buf, kBinVersion);
    put_u16(buf, static_cast<std::uint16_t>(stream.width));
    put_u16(buf, static_cast<std::uint16_t>(stream.height));
    put_u32(buf, 0);
    put_u16(buf, 0);
    for (const Event& e : stream.events) {
      put_u64(buf, static_cast<std::uint64_t>(e.t_us));
      put_u16(buf, e.x);
      put_u16(buf, e.y);
      buf.push_back(static_cast<char>(static_cast<std::int8_t>(e.polarity)));
    }
  }
  write_file(path, buf);
}

void write_events(const EventStream& stream, const fs::path& path) {
  write_events(stream, path, event_format_from_path(path));
}

EventStream read_events(const fs::path& path, EventFormat format, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + describe(path));
  EventStream stream;
  stream.width = width;
  stream.height = height;

  if (format == EventFormat::Csv) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("t_us,x,y,p", 0) != 0)
      throw FormatError(describe(path) + ": missing 't_us,x,y,p' header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      long long t = 0;
      unsigned x = 0, y = 0;
      int p = 0;
      if (std::sscanf(line.c_str(), "%lld,%u,%u,%d", &t, &x, &y, &p) != 4 || (p != 1 && p != -1) ||
          x > 0xffff || y > 0xffff)
        throw FormatError(describe(path) + ":" + std::to_string(lineno) + ": bad event line");
      stream.events.push_back({t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                               p > 0 ? Polarity::On : Polarity::Off});
    }
  } else {
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < kBinHeaderSize || std::memcmp(p, kBinMagic.data(), kBinMagic.size()) != 0)
      throw FormatError(describe(path) + ": not a CSDV event file");
    if (get_le(p + 4, 2) != kBinVersion)
      throw FormatError(describe(path) + ": unsupported version " + std::to_string(get_le(p + 4, 2)));
    stream.width = static_cast<int>(get_le(p + 6, 2));
    stream.height = static_cast<int>(get_le(p + 8, 2));
    std::size_t body = bytes.size() - kBinHeaderSize;
    if (body % kBinRecordSize != 0) throw FormatError(describe(path) + ": truncated event record");
    stream.events.reserve(body / kBinRecordSize);
    for (std::size_t off = kBinHeaderSize; off < bytes.size(); off += kBinRecordSize) {
      const unsigned char* r = p + off;
      auto pol = static_cast<std::int8_t>(r[12]);
      if (pol != 1 && pol != -1) throw FormatError(describe(path) + ": invalid polarity byte");
      stream.events.push_back({static_cast<std::int64_t>(get_le(r, 8)),
                               static_cast<std::uint16_t>(get_le(r + 8, 2)),
                               static_cast<std::uint16_t>(get_le(r + 10, 2)),
                               pol > 0 ? Polarity::On : Polarity::Off});
    }
  }
  if (!stream.events.empty()) stream.duration_us = stream.events.back().t_us;
  return stream;
}

std::vector<Grid<std::uint8_t>> accumulate_windows(const EventStream& stream, std::int64_t window_us) {
  if (window_us <= 0) throw ConfigError("render window must be positive");
  std::int64_t span = stream.duration_us;
  if (!stream.events.empty()) span = std::max(span, stream.events.back().t_us);
  std::int64_t n = std::max<std::int64_t>(1, (span + window_us - 1) / window_us);

  std::vector<Grid<int>> net(static_cast<std::size_t>(n), Grid<int>(stream.width, stream.height));
  for (const Event& e : stream.events) {
    if (e.x >= stream.width || e.y >= stream.height) throw FormatError("event outside the sensor");
    std::int64_t k = std::clamp<std::int64_t>(e.t_us / window_us, 0, n - 1);
    net[static_cast<std::size_t>(k)](e.x, e.y) += static_cast<int>(e.polarity);
  }

  std::vector<Grid<std::uint8_t>> out;
  out.reserve(net.size());
  for (const auto& counts : net) {
    Grid<std::uint8_t> img(stream.width, stream.height);
    for (std::size_t i = 0; i < counts.size(); ++i)
      img[i] = static_cast<std::uint8_t>(128 + 32 * std::clamp(counts[i], -3, 3));
    out.push_back(std::move(img));
  }
  return out;
}

std::size_t render_accumulation(const EventStream& stream, std::int64_t window_us,
                                const fs::path& out_dir) {
  auto images = accumulate_windows(stream, window_us);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + describe(out_dir) + ": " + ec.message());
  for (std::size_t k = 0; k < images.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "accum_%06zu.pgm", k);
    write_pgm(out_dir / name, images[k]);
  }
  return images.size();
}

}  // namespace csdvs
