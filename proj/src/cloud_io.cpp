#include "hybridfusion/cloud_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

namespace {

/// Splits text into lines (LF or CRLF) while tracking 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::optional<std::string_view> next() {
    if (pos_ >= text_.size()) return std::nullopt;
    const std::size_t end = text_.find('\n', pos_);
    std::string_view line = text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
    pos_ = end == std::string_view::npos ? text_.size() : end + 1;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  }

  std::size_t line() const { return line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::optional<std::size_t> parse_count(std::string_view token) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

double parse_coordinate(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* begin = token.data();
  if (!token.empty() && token.front() == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw ParseError("non-numeric coordinate '" + std::string(token.substr(0, 32)) + "'", line);
  }
  return value;
}

struct Columns {
  std::size_t width = 0;
  std::optional<std::size_t> x, y, z;

  void require(std::size_t line) const {
    if (!x || !y || !z) throw ParseError("header lacks x, y or z", line);
  }
};

Point3 read_point(const std::vector<std::string_view>& tokens, const Columns& cols, std::size_t line) {
  if (tokens.size() != cols.width) {
    throw ParseError("expected " + std::to_string(cols.width) + " values, found " + std::to_string(tokens.size()),
                     line);
  }
  return {parse_coordinate(tokens[*cols.x], line), parse_coordinate(tokens[*cols.y], line),
          parse_coordinate(tokens[*cols.z], line)};
}

void read_body(LineReader& reader, std::size_t count, const Columns& cols, PointCloud3& cloud) {
  cloud.points.reserve(std::min<std::size_t>(count, 1u << 20));
  for (std::size_t i = 0; i < count; ++i) {
    const auto line = reader.next();
    if (!line) throw ParseError("truncated body: expected " + std::to_string(count) + " points", reader.line() + 1);
    cloud.points.push_back(read_point(tokenize(*line), cols, reader.line()));
  }
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  Columns columns;
  bool has_list = false;
};

PointCloud3 parse_ply(std::string_view text) {
  LineReader reader(text);
  const auto magic = reader.next();
  if (!magic || tokenize(*magic) != std::vector<std::string_view>{"ply"}) throw ParseError("missing 'ply' magic", 1);

  std::vector<PlyElement> elements;
  bool format_seen = false;
  bool header_done = false;
  while (const auto line = reader.next()) {
    const auto tokens = tokenize(*line);
    if (tokens.empty()) continue;
    const std::string_view key = tokens[0];
    if (key == "comment" || key == "obj_info") continue;
    if (key == "end_header") {
      header_done = true;
      break;
    }
    if (key == "format") {
      if (tokens.size() != 3) throw ParseError("malformed format line", reader.line());
      if (tokens[1] == "binary_little_endian" || tokens[1] == "binary_big_endian") {
        throw UnsupportedFormatError("binary PLY is not supported");
      }
      if (tokens[1] != "ascii") throw ParseError("unknown PLY format '" + std::string(tokens[1]) + "'", reader.line());
      format_seen = true;
    } else if (key == "element") {
      if (tokens.size() != 3) throw ParseError("malformed element line", reader.line());
      const auto count = parse_count(tokens[2]);
      if (!count) throw ParseError("bad element count", reader.line());
      elements.push_back(PlyElement{std::string(tokens[1]), *count, {}, false});
    } else if (key == "property") {
      if (elements.empty()) throw ParseError("property before any element", reader.line());
      PlyElement& e = elements.back();
      if (tokens.size() >= 2 && tokens[1] == "list") {
        if (tokens.size() != 5) throw ParseError("malformed list property", reader.line());
        e.has_list = true;
        continue;
      }
      if (tokens.size() != 3) throw ParseError("malformed property line", reader.line());
      const std::size_t column = e.columns.width++;
      if (tokens[2] == "x") e.columns.x = column;
      if (tokens[2] == "y") e.columns.y = column;
      if (tokens[2] == "z") e.columns.z = column;
    } else {
      throw ParseError("unknown header keyword '" + std::string(key.substr(0, 32)) + "'", reader.line());
    }
  }
  if (!header_done) throw ParseError("missing end_header", reader.line());
  if (!format_seen) throw ParseError("missing format line", reader.line());

  PointCloud3 cloud;
  bool vertex_seen = false;
  for (const PlyElement& e : elements) {
    if (e.name == "vertex") {
      if (vertex_seen) throw ParseError("duplicate vertex element", reader.line());
      if (e.has_list) throw ParseError("list property on vertex element", reader.line());
      e.columns.require(reader.line());
      read_body(reader, e.count, e.columns, cloud);
      vertex_seen = true;
    } else {
      for (std::size_t i = 0; i < e.count; ++i) {
        if (!reader.next()) throw ParseError("truncated body in element '" + e.name + "'", reader.line() + 1);
      }
    }
  }
  if (!vertex_seen) throw ParseError("no vertex element", reader.line());
  return cloud;
}

PointCloud3 parse_pcd(std::string_view text) {
  LineReader reader(text);
  Columns cols;
  std::vector<std::string_view> fields;
  std::vector<std::size_t> counts;
  std::optional<std::size_t> points;
  bool data_seen = false;
  while (const auto line = reader.next()) {
    const auto tokens = tokenize(*line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    const std::string_view key = tokens[0];
    if (key == "FIELDS") {
      fields.assign(tokens.begin() + 1, tokens.end());
    } else if (key == "COUNT") {
      counts.clear();
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto c = parse_count(tokens[i]);
        if (!c || *c == 0 || *c > 4096) throw ParseError("bad COUNT value", reader.line());
        counts.push_back(*c);
      }
    } else if (key == "POINTS") {
      if (tokens.size() != 2 || !(points = parse_count(tokens[1]))) throw ParseError("bad POINTS line", reader.line());
    } else if (key == "DATA") {
      if (tokens.size() != 2) throw ParseError("bad DATA line", reader.line());
      if (tokens[1] == "binary" || tokens[1] == "binary_compressed") {
        throw UnsupportedFormatError("binary PCD is not supported");
      }
      if (tokens[1] != "ascii") throw ParseError("unknown DATA encoding", reader.line());
      data_seen = true;
      break;
    } else if (key == "VERSION" || key == "SIZE" || key == "TYPE" || key == "WIDTH" || key == "HEIGHT" ||
               key == "VIEWPOINT") {
      continue;
    } else {
      throw ParseError("unknown header keyword '" + std::string(key.substr(0, 32)) + "'", reader.line());
    }
  }
  if (!data_seen) throw ParseError("missing DATA line", reader.line());
  if (fields.empty()) throw ParseError("missing FIELDS line", reader.line());
  if (!points) throw ParseError("missing POINTS line", reader.line());
  if (!counts.empty() && counts.size() != fields.size()) throw ParseError("COUNT does not match FIELDS", reader.line());

  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::size_t n = counts.empty() ? 1 : counts[i];
    if (fields[i] == "x" && n == 1) cols.x = cols.width;
    if (fields[i] == "y" && n == 1) cols.y = cols.width;
    if (fields[i] == "z" && n == 1) cols.z = cols.width;
    cols.width += n;
  }
  cols.require(reader.line());

  PointCloud3 cloud;
  read_body(reader, *points, cols, cloud);
  return cloud;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void append_point(std::string& out, const Point3& p) {
  char buf[96];
  const int n = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".ply") return CloudFormat::kPly;
  if (ext == ".pcd") return CloudFormat::kPcd;
  throw UnsupportedFormatError("unsupported cloud extension '" + ext + "'");
}

PointCloud3 parse_cloud(std::string_view text, CloudFormat format) {
  return format == CloudFormat::kPly ? parse_ply(text) : parse_pcd(text);
}

PointCloud3 load_cloud(const std::filesystem::path& path) {
  const CloudFormat format = format_from_path(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_cloud(buffer.str(), format);
}

std::string format_cloud(const PointCloud3& cloud, CloudFormat format) {
  std::string out;
  const std::string n = std::to_string(cloud.size());
  if (format == CloudFormat::kPly) {
    out += "ply\nformat ascii 1.0\nelement vertex " + n +
           "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  } else {
    out += "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\n"
           "COUNT 1 1 1\nWIDTH " + n + "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " + n + "\nDATA ascii\n";
  }
  out.reserve(out.size() + cloud.size() * 40);
  for (const auto& p : cloud.points) append_point(out, p);
  return out;
}

void save_cloud(const PointCloud3& cloud, const std::filesystem::path& path, CloudFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  const std::string text = format_cloud(cloud, format);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_cloud(const PointCloud3& cloud, const std::filesystem::path& path) {
  save_cloud(cloud, path, format_from_path(path));
}

}  // namespace hybridfusion
