#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hybridfusion/cloud.hpp"

namespace hybridfusion {

enum class CloudFormat { kPly, kPcd };

/// Format from the file extension (.ply / .pcd, case-insensitive). Throws
/// UnsupportedFormatError otherwise.
CloudFormat format_from_path(const std::filesystem::path& path);

/// Parse ASCII PLY or PCD text. Only x, y, z are kept; other per-point
/// attributes are skipped. Binary encodings raise UnsupportedFormatError,
/// anything malformed raises ParseError with the offending line.
PointCloud3 parse_cloud(std::string_view text, CloudFormat format);

PointCloud3 load_cloud(const std::filesystem::path& path);

/// ASCII text with coordinates printed to 9 significant digits.
std::string format_cloud(const PointCloud3& cloud, CloudFormat format);

/// Throws IoError when the file cannot be written.
void save_cloud(const PointCloud3& cloud, const std::filesystem::path& path, CloudFormat format);
void save_cloud(const PointCloud3& cloud, const std::filesystem::path& path);

}  // namespace hybridfusion
