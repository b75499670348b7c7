#include "countfree/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <sstream>
#include <vector>

#include "countfree/errors.hpp"

namespace countfree {
namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::size_t reserve) { buf_.reserve(reserve); }
  void bytes(const char* s, std::size_t n) { buf_.insert(buf_.end(), s, s + n); }
  template <class T>
  void put(T v) {
    v = to_little(v);
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    bytes(raw, sizeof(T));
  }
  void save(const std::filesystem::path& path) const {
    auto out = open_output(path, true);
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("failed writing " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> buf, std::filesystem::path path)
      : buf_(std::move(buf)), path_(std::move(path)) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > buf_.size())
      throw FormatError(path_.string() + ": truncated " + what + ": expected at least " +
                        std::to_string(pos_ + n) + " bytes, file has " +
                        std::to_string(buf_.size()));
  }
  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  void magic(const char (&expected)[5]) {
    need(4, "magic");
    if (std::memcmp(buf_.data(), expected, 4) != 0)
      throw FormatError(path_.string() + ": bad magic, expected \"" + expected + "\"");
    pos_ += 4;
  }
  void version(std::uint16_t supported) {
    const auto v = get<std::uint16_t>("version");
    if (v != supported)
      throw FormatError(path_.string() + ": unsupported version " + std::to_string(v));
  }
  void finish() const {
    if (pos_ != buf_.size())
      throw FormatError(path_.string() + ": expected " + std::to_string(pos_) +
                        " bytes, file has " + std::to_string(buf_.size()));
  }
  [[nodiscard]] std::size_t pos() const noexcept { return pos_; }
  [[nodiscard]] std::size_t size() const noexcept { return buf_.size(); }
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::vector<char> buf_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

Reader read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return Reader(std::move(buf), path);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void save_cube(const TransientCube& cube, const std::filesystem::path& path) {
  cube.validate();
  Writer w(26 + cube.data.size() * 4);
  w.bytes("TCUB", 4);
  w.put(kCubeVersion);
  w.put(checked_u32(cube.height, "cube height"));
  w.put(checked_u32(cube.width, "cube width"));
  w.put(checked_u32(cube.bins, "cube bin count"));
  w.put(cube.bin_width_s);
  for (float v : cube.data) w.put(v);
  w.save(path);
}

TransientCube load_cube(const std::filesystem::path& path) {
  Reader r = read_file(path);
  r.magic("TCUB");
  r.version(kCubeVersion);
  TransientCube cube;
  cube.height = r.get<std::uint32_t>("header");
  cube.width = r.get<std::uint32_t>("header");
  cube.bins = r.get<std::uint32_t>("header");
  cube.bin_width_s = r.get<double>("header");
  const std::size_t n = cube.height * cube.width * cube.bins;
  const std::size_t expected = r.pos() + n * sizeof(float);
  if (r.size() != expected)
    throw FormatError(path.string() + ": expected " + std::to_string(expected) +
                      " bytes, file has " + std::to_string(r.size()));
  cube.data.resize(n);
  for (auto& v : cube.data) v = r.get<float>("payload");
  try {
    cube.validate();
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return cube;
}

void save_stream(const TimestampStream& s, const std::filesystem::path& path) {
  if (s.pixels.size() != s.height * s.width)
    throw std::invalid_argument("stream pixel count does not match its dimensions");
  std::size_t events = 0;
  for (const auto& p : s.pixels) events += p.size();
  Writer w(18 + 4 * s.pixels.size() + 8 * events);
  w.bytes("TSTR", 4);
  w.put(kStreamVersion);
  w.put(checked_u32(s.height, "stream height"));
  w.put(checked_u32(s.width, "stream width"));
  w.put(s.total_cycles);
  for (const auto& p : s.pixels) {
    w.put(checked_u32(p.size(), "pixel event count"));
    for (const auto& e : p) {
      w.put(e.cycle);
      w.put(e.delay_bins);
    }
  }
  w.save(path);
}

TimestampStream load_stream(const std::filesystem::path& path) {
  Reader r = read_file(path);
  r.magic("TSTR");
  r.version(kStreamVersion);
  TimestampStream s;
  s.height = r.get<std::uint32_t>("header");
  s.width = r.get<std::uint32_t>("header");
  s.total_cycles = r.get<std::uint32_t>("header");
  s.pixels.resize(s.height * s.width);
  for (auto& p : s.pixels) {
    const auto n = r.get<std::uint32_t>("event count");
    r.need(std::size_t{n} * 8, "events");
    p.resize(n);
    std::uint32_t prev = 0;
    for (auto& e : p) {
      e.cycle = r.get<std::uint32_t>("event");
      e.delay_bins = r.get<float>("event");
      if (e.cycle >= s.total_cycles)
        throw FormatError(path.string() + ": event cycle " + std::to_string(e.cycle) +
                          " is not below the total of " + std::to_string(s.total_cycles));
      if (e.cycle < prev) throw FormatError(path.string() + ": events are not sorted by cycle");
      if (!(e.delay_bins >= 0.0f) || !std::isfinite(e.delay_bins))
        throw FormatError(path.string() + ": negative or non-finite delay");
      prev = e.cycle;
    }
  }
  r.finish();
  return s;
}

void write_pgm(const DistanceMap& map, const std::filesystem::path& path) {
  std::ostringstream header;
  header << "P5\n" << map.width() << ' ' << map.height() << "\n65535\n";
  std::string out = header.str();
  out.reserve(out.size() + 2 * map.meters.size());
  for (std::size_t i = 0; i < map.meters.size(); ++i) {
    std::uint16_t v = 0;
    if (map.valid.data[i] && map.d_max > 0.0) {
      const double x = std::clamp(map.meters.data[i] / map.d_max, 0.0, 1.0);
      v = static_cast<std::uint16_t>(std::lround(x * 65535.0));
    }
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  auto f = open_output(path, true);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

void write_csv(const DistanceMap& map, const std::filesystem::path& path) {
  auto f = open_output(path);
  f << std::setprecision(9);
  for (std::size_t r = 0; r < map.height(); ++r) {
    for (std::size_t c = 0; c < map.width(); ++c) {
      if (c) f << ',';
      if (map.valid(r, c))
        f << map.meters(r, c);
      else
        f << "nan";
    }
    f << '\n';
  }
  if (!f) throw IoError("failed writing " + path.string());
}

DistanceMap load_csv_map(const std::filesystem::path& path, double d_max) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!rows.empty() && cells.size() != rows.front().size())
      throw FormatError(path.string() + ": row " + std::to_string(rows.size() + 1) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(rows.front().size()));
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw FormatError(path.string() + ": empty map");
  DistanceMap map(rows.size(), rows.front().size(), d_max);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const auto& cell = rows[r][c];
      if (cell == "nan") continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || !std::isfinite(v))
        throw FormatError(path.string() + ": cannot parse \"" + cell + "\" at row " +
                          std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      map.meters(r, c) = v;
      map.valid(r, c) = 1;
    }
  }
  return map;
}

nlohmann::json to_json(const SceneMetrics& m) {
  nlohmann::json j;
  j["mae_m"] = std::isfinite(m.mae_m) ? nlohmann::json(m.mae_m) : nlohmann::json(nullptr);
  j["inlier_5pct"] = m.inlier_5pct;
  j["inlier_1pct"] = m.inlier_1pct;
  j["readout_bits_per_pixel"] = m.readout_bits_per_pixel;
  j["compression_ratio"] = m.compression_ratio;
  j["bin_count_ratio"] = m.bin_count_ratio;
  j["evaluated_pixels"] = m.evaluated_pixels;
  return j;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto f = open_output(path);
  f << j.dump(2) << '\n';
  if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace countfree
