#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "countfree/scene.hpp"

namespace countfree {

inline constexpr std::uint16_t kCubeVersion = 1;
inline constexpr std::uint16_t kStreamVersion = 1;

/// TCUB: "TCUB", u16 version, u32 H, u32 W, u32 B, f64 bin width (s), then
/// H*W*B f32 rates in (row, col, bin) order. All little-endian.
void save_cube(const TransientCube& cube, const std::filesystem::path& path);
/// Throws FormatError for a bad magic or version, truncation (naming the
/// expected and actual byte counts), trailing bytes, or negative/NaN rates.
TransientCube load_cube(const std::filesystem::path& path);

/// TSTR: "TSTR", u16 version, u32 H, u32 W, u32 total cycles, then per pixel
/// a u32 event count followed by (u32 cycle, f32 delay) pairs. Little-endian.
void save_stream(const TimestampStream& stream, const std::filesystem::path& path);
TimestampStream load_stream(const std::filesystem::path& path);

/// Binary 16-bit PGM, distance scaled so d_max maps to 65535; invalid pixels 0.
void write_pgm(const DistanceMap& map, const std::filesystem::path& path);
/// One CSV row per image row, "nan" for invalid pixels.
void write_csv(const DistanceMap& map, const std::filesystem::path& path);

/// Reads a map written by write_csv. Throws FormatError on ragged rows or
/// unparsable cells.
DistanceMap load_csv_map(const std::filesystem::path& path, double d_max);

nlohmann::json to_json(const SceneMetrics& metrics);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

/// Opens a file for writing, throwing IoError naming the path on failure.
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);

}  // namespace countfree
