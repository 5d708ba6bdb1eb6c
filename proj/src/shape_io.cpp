#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Geometry>

#include "diff3f/error.hpp"
#include "diff3f/rng.hpp"
#include "diff3f/shape.hpp"

namespace diff3f {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY support assumes a little-endian host");

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  }
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorCode::kUnreadableFile, "read failed for " + path.string());
  }
  return contents;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

double parse_double(std::string_view token, const char* what) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::kMalformedGeometry,
                std::string("cannot parse ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

long long parse_int(std::string_view token, const char* what) {
  long long value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::kMalformedGeometry,
                std::string("cannot parse ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

// Appends a fan triangulation of `polygon`, skipping triangles that reuse a
// vertex.
void append_fan(const std::vector<long long>& polygon, std::size_t vertex_count,
                std::vector<Face>& faces) {
  for (long long idx : polygon) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= vertex_count) {
      throw Error(ErrorCode::kMalformedGeometry,
                  "face index " + std::to_string(idx) + " out of range for " +
                      std::to_string(vertex_count) + " vertices");
    }
  }
  for (std::size_t k = 1; k + 1 < polygon.size(); ++k) {
    const Face face{static_cast<std::uint32_t>(polygon[0]),
                    static_cast<std::uint32_t>(polygon[k]),
                    static_cast<std::uint32_t>(polygon[k + 1])};
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) continue;
    faces.push_back(face);
  }
}

struct RawGeometry {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  bool file_has_faces = false;
};

// --- OBJ --------------------------------------------------------------------

RawGeometry parse_obj(const std::string& text) {
  RawGeometry geo;
  std::vector<std::vector<long long>> polygons;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "v") {
      if (tokens.size() < 4) {
        throw Error(ErrorCode::kMalformedGeometry, "OBJ vertex with fewer than 3 coordinates");
      }
      geo.vertices.emplace_back(parse_double(tokens[1], "coordinate"),
                                parse_double(tokens[2], "coordinate"),
                                parse_double(tokens[3], "coordinate"));
    } else if (tokens[0] == "f") {
      std::vector<long long> polygon;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto slash = tokens[i].find('/');
        const long long raw = parse_int(tokens[i].substr(0, slash), "face index");
        if (raw == 0) throw Error(ErrorCode::kMalformedGeometry, "OBJ face index 0");
        // Negative indices are relative to the vertices read so far.
        polygon.push_back(raw > 0 ? raw - 1
                                  : static_cast<long long>(geo.vertices.size()) + raw);
      }
      polygons.push_back(std::move(polygon));
    }
  }
  geo.file_has_faces = !polygons.empty();
  for (const auto& polygon : polygons) append_fan(polygon, geo.vertices.size(), geo.faces);
  return geo;
}

// --- OFF --------------------------------------------------------------------

RawGeometry parse_off(const std::string& text) {
  std::vector<std::vector<std::string_view>> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view() : rest.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    auto tokens = split_ws(line);
    if (!tokens.empty()) lines.push_back(std::move(tokens));
  }
  if (lines.empty() || lines[0][0].substr(0, 3) != "OFF") {
    throw Error(ErrorCode::kMalformedGeometry, "missing OFF header");
  }
  std::size_t cursor = 0;
  std::vector<std::string_view> counts(lines[0].begin() + 1, lines[0].end());
  if (counts.empty()) {
    if (lines.size() < 2) throw Error(ErrorCode::kMalformedGeometry, "missing OFF counts");
    counts = lines[1];
    cursor = 2;
  } else {
    cursor = 1;
  }
  if (counts.size() < 2) throw Error(ErrorCode::kMalformedGeometry, "bad OFF counts line");
  const long long nv = parse_int(counts[0], "vertex count");
  const long long nf = parse_int(counts[1], "face count");
  if (nv < 0 || nf < 0) throw Error(ErrorCode::kMalformedGeometry, "negative OFF counts");
  if (lines.size() < cursor + static_cast<std::size_t>(nv + nf)) {
    throw Error(ErrorCode::kMalformedGeometry, "OFF file shorter than its counts");
  }
  RawGeometry geo;
  geo.vertices.reserve(static_cast<std::size_t>(nv));
  for (long long i = 0; i < nv; ++i) {
    const auto& t = lines[cursor++];
    if (t.size() < 3) throw Error(ErrorCode::kMalformedGeometry, "OFF vertex line too short");
    geo.vertices.emplace_back(parse_double(t[0], "coordinate"), parse_double(t[1], "coordinate"),
                              parse_double(t[2], "coordinate"));
  }
  geo.file_has_faces = nf > 0;
  for (long long i = 0; i < nf; ++i) {
    const auto& t = lines[cursor++];
    const long long n = parse_int(t[0], "polygon size");
    if (n < 0 || t.size() < static_cast<std::size_t>(n) + 1) {
      throw Error(ErrorCode::kMalformedGeometry, "OFF face line too short");
    }
    std::vector<long long> polygon;
    for (long long k = 0; k < n; ++k) polygon.push_back(parse_int(t[1 + k], "face index"));
    append_fan(polygon, geo.vertices.size(), geo.faces);
  }
  return geo;
}

// --- PLY --------------------------------------------------------------------

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

PlyType parse_ply_type(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  throw Error(ErrorCode::kMalformedGeometry, "unknown PLY type '" + std::string(name) + "'");
}

std::size_t ply_type_size(PlyType type) {
  switch (type) {
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

template <typename T>
T load_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

double read_binary_value(PlyType type, const char* p) {
  switch (type) {
    case PlyType::kInt8: return load_le<std::int8_t>(p);
    case PlyType::kUint8: return load_le<std::uint8_t>(p);
    case PlyType::kInt16: return load_le<std::int16_t>(p);
    case PlyType::kUint16: return load_le<std::uint16_t>(p);
    case PlyType::kInt32: return load_le<std::int32_t>(p);
    case PlyType::kUint32: return load_le<std::uint32_t>(p);
    case PlyType::kFloat32: return load_le<float>(p);
    case PlyType::kFloat64: return load_le<double>(p);
  }
  return 0.0;
}

// Sequential value source over either ascii tokens or binary bytes.
class PlyReader {
 public:
  PlyReader(std::string_view body, bool binary) : body_(body), binary_(binary) {}

  double next(PlyType type) {
    if (binary_) {
      const std::size_t size = ply_type_size(type);
      if (pos_ + size > body_.size()) {
        throw Error(ErrorCode::kMalformedGeometry, "binary PLY body is truncated");
      }
      const double value = read_binary_value(type, body_.data() + pos_);
      pos_ += size;
      return value;
    }
    while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
    std::size_t end = pos_;
    while (end < body_.size() && !std::isspace(static_cast<unsigned char>(body_[end]))) ++end;
    if (end == pos_) throw Error(ErrorCode::kMalformedGeometry, "ascii PLY body is truncated");
    const auto token = body_.substr(pos_, end - pos_);
    pos_ = end;
    return parse_double(token, "PLY value");
  }

 private:
  std::string_view body_;
  bool binary_;
  std::size_t pos_ = 0;
};

RawGeometry parse_ply(const std::string& text) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    if (pos >= text.size()) {
      throw Error(ErrorCode::kMalformedGeometry, "PLY header is not terminated");
    }
    const auto nl = text.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? text.size() : nl;
    std::string_view line(text.data() + pos, end - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  if (next_line() != "ply") throw Error(ErrorCode::kMalformedGeometry, "missing 'ply' magic");
  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    const auto tokens = split_ws(next_line());
    if (tokens.empty()) continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2) throw Error(ErrorCode::kMalformedGeometry, "bad PLY format line");
      if (tokens[1] == "ascii") {
        binary = false;
      } else if (tokens[1] == "binary_little_endian") {
        binary = true;
      } else {
        throw Error(ErrorCode::kUnreadableFile,
                    "unsupported PLY format '" + std::string(tokens[1]) + "'");
      }
    } else if (tokens[0] == "element") {
      if (tokens.size() < 3) throw Error(ErrorCode::kMalformedGeometry, "bad PLY element line");
      const long long count = parse_int(tokens[2], "element count");
      if (count < 0) throw Error(ErrorCode::kMalformedGeometry, "negative PLY element count");
      elements.push_back({std::string(tokens[1]), static_cast<std::size_t>(count), {}});
    } else if (tokens[0] == "property") {
      if (elements.empty()) {
        throw Error(ErrorCode::kMalformedGeometry, "PLY property before any element");
      }
      PlyProperty prop;
      if (tokens.size() >= 5 && tokens[1] == "list") {
        prop.is_list = true;
        prop.count_type = parse_ply_type(tokens[2]);
        prop.type = parse_ply_type(tokens[3]);
        prop.name = tokens[4];
      } else if (tokens.size() >= 3) {
        prop.type = parse_ply_type(tokens[1]);
        prop.name = tokens[2];
      } else {
        throw Error(ErrorCode::kMalformedGeometry, "bad PLY property line");
      }
      elements.back().properties.push_back(std::move(prop));
    } else {
      throw Error(ErrorCode::kMalformedGeometry,
                  "unknown PLY header keyword '" + std::string(tokens[0]) + "'");
    }
  }

  RawGeometry geo;
  std::vector<std::vector<long long>> polygons;
  PlyReader reader(std::string_view(text).substr(pos), binary);
  for (const auto& element : elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";
    int xyz[3] = {-1, -1, -1};
    int index_prop = -1;
    for (int p = 0; p < static_cast<int>(element.properties.size()); ++p) {
      const auto& prop = element.properties[p];
      if (is_vertex && !prop.is_list) {
        if (prop.name == "x") xyz[0] = p;
        if (prop.name == "y") xyz[1] = p;
        if (prop.name == "z") xyz[2] = p;
      }
      if (is_face && prop.is_list && index_prop < 0 &&
          (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
        index_prop = p;
      }
    }
    if (is_vertex && (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0)) {
      throw Error(ErrorCode::kMalformedGeometry, "PLY vertex element lacks x/y/z");
    }
    if (is_face) geo.file_has_faces = element.count > 0;
    for (std::size_t i = 0; i < element.count; ++i) {
      Vec3 v = Vec3::Zero();
      std::vector<long long> polygon;
      for (int p = 0; p < static_cast<int>(element.properties.size()); ++p) {
        const auto& prop = element.properties[p];
        if (prop.is_list) {
          const double n = reader.next(prop.count_type);
          if (n < 0) throw Error(ErrorCode::kMalformedGeometry, "negative PLY list length");
          for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
            const double value = reader.next(prop.type);
            if (p == index_prop) polygon.push_back(static_cast<long long>(value));
          }
        } else {
          const double value = reader.next(prop.type);
          for (int a = 0; a < 3; ++a) {
            if (is_vertex && p == xyz[a]) v[a] = value;
          }
        }
      }
      if (is_vertex) geo.vertices.push_back(v);
      if (is_face && index_prop >= 0) polygons.push_back(std::move(polygon));
    }
  }
  for (const auto& polygon : polygons) append_fan(polygon, geo.vertices.size(), geo.faces);
  return geo;
}

void write_scalar(std::ostream& out, double value, PlyPrecision precision) {
  if (precision == PlyPrecision::kFloat32) {
    const float f = static_cast<float>(value);
    out.write(reinterpret_cast<const char*>(&f), sizeof f);
  } else {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
  }
}

}  // namespace

Eigen::AlignedBox3d bounding_box(std::span<const Vec3> points) {
  Eigen::AlignedBox3d box;
  for (const auto& p : points) box.extend(p);
  return box;
}

double bbox_diagonal(std::span<const Vec3> points) {
  if (points.empty()) return 0.0;
  const auto box = bounding_box(points);
  return (box.max() - box.min()).norm();
}

Shape load_shape(const std::filesystem::path& path, ShapeKind kind) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kUnreadableFile, "no such file: " + path.string());
  }
  const std::string text = read_file(path);
  const std::string ext = lower(path.extension().string());
  RawGeometry geo;
  if (ext == ".obj") {
    geo = parse_obj(text);
  } else if (ext == ".ply") {
    geo = parse_ply(text);
  } else if (ext == ".off") {
    geo = parse_off(text);
  } else {
    throw Error(ErrorCode::kUnreadableFile, "unsupported shape format '" + ext + "'");
  }
  if (geo.vertices.empty()) {
    throw Error(ErrorCode::kEmptyShape, path.string() + " has no vertices");
  }
  for (const auto& v : geo.vertices) {
    if (!v.allFinite()) {
      throw Error(ErrorCode::kMalformedGeometry, "non-finite coordinate in " + path.string());
    }
  }
  Shape shape;
  shape.vertices = std::move(geo.vertices);
  if (kind != ShapeKind::kPointCloud && geo.file_has_faces && !geo.faces.empty()) {
    shape.faces = std::move(geo.faces);
  }
  shape.bbox_diagonal = bbox_diagonal(shape.vertices);
  return shape;
}

Shape normalize(const Shape& shape) {
  if (shape.vertices.empty()) throw Error(ErrorCode::kEmptyShape, "cannot normalize an empty shape");
  Vec3 sum = Vec3::Zero();
  for (const auto& v : shape.vertices) {
    if (!v.allFinite()) throw Error(ErrorCode::kMalformedGeometry, "non-finite vertex");
    sum += v;
  }
  const Vec3 centroid = sum / static_cast<double>(shape.vertices.size());
  const auto box = bounding_box(shape.vertices);
  const double extent = (box.max() - box.min()).maxCoeff();
  const double magnitude = std::max(1.0, box.max().cwiseAbs().cwiseMax(box.min().cwiseAbs()).maxCoeff());
  if (!(extent > 1e-12 * magnitude)) {
    throw Error(ErrorCode::kDegenerateShape, "all vertices coincide; scale is zero");
  }

  Shape out;
  out.vertices.reserve(shape.vertices.size());
  for (const auto& v : shape.vertices) out.vertices.push_back((v - centroid) / extent);
  out.faces = shape.faces;
  out.normalization.centroid = shape.normalization.to_original(centroid);
  out.normalization.scale = shape.normalization.scale * extent;
  out.bbox_diagonal = bbox_diagonal(out.vertices);
  return out;
}

SamplePlan random_sample(const Shape& shape, std::size_t count, std::uint64_t seed) {
  const std::size_t n = shape.vertices.size();
  if (count < 1 || count > n) {
    throw Error(ErrorCode::kCountTooLarge, "cannot sample " + std::to_string(count) +
                                               " of " + std::to_string(n) + " vertices");
  }
  std::vector<std::uint32_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return {std::move(pool), seed};
}

SamplePlan all_points(const Shape& shape) {
  SamplePlan plan;
  plan.indices.resize(shape.vertices.size());
  std::iota(plan.indices.begin(), plan.indices.end(), 0u);
  return plan;
}

void write_ply(const std::filesystem::path& path, const Shape& shape,
               std::span<const Rgb> colors, const PlyWriteOptions& options) {
  if (!colors.empty() && colors.size() != shape.vertices.size()) {
    throw Error(ErrorCode::kInvalidArgument, "color count does not match vertex count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());

  const bool binary = options.format == PlyFormat::kBinary;
  const bool faces = options.write_faces && shape.has_faces();
  const char* scalar = options.precision == PlyPrecision::kFloat32 ? "float" : "double";
  out << "ply\n"
      << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << shape.vertices.size() << "\n"
      << "property " << scalar << " x\n"
      << "property " << scalar << " y\n"
      << "property " << scalar << " z\n";
  if (!colors.empty()) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  if (faces) {
    out << "element face " << shape.faces->size() << "\n"
        << "property list uchar int vertex_indices\n";
  }
  out << "end_header\n";

  if (binary) {
    for (std::size_t i = 0; i < shape.vertices.size(); ++i) {
      for (int a = 0; a < 3; ++a) write_scalar(out, shape.vertices[i][a], options.precision);
      if (!colors.empty()) {
        const std::uint8_t rgb[3] = {colors[i].r, colors[i].g, colors[i].b};
        out.write(reinterpret_cast<const char*>(rgb), 3);
      }
    }
    if (faces) {
      for (const auto& f : *shape.faces) {
        const std::uint8_t n = 3;
        out.write(reinterpret_cast<const char*>(&n), 1);
        for (auto idx : f) {
          const std::int32_t i32 = static_cast<std::int32_t>(idx);
          out.write(reinterpret_cast<const char*>(&i32), sizeof i32);
        }
      }
    }
  } else {
    out.precision(options.precision == PlyPrecision::kFloat32 ? 9 : 17);
    for (std::size_t i = 0; i < shape.vertices.size(); ++i) {
      const auto& v = shape.vertices[i];
      if (options.precision == PlyPrecision::kFloat32) {
        out << static_cast<float>(v.x()) << ' ' << static_cast<float>(v.y()) << ' '
            << static_cast<float>(v.z());
      } else {
        out << v.x() << ' ' << v.y() << ' ' << v.z();
      }
      if (!colors.empty()) {
        out << ' ' << int(colors[i].r) << ' ' << int(colors[i].g) << ' ' << int(colors[i].b);
      }
      out << '\n';
    }
    if (faces) {
      for (const auto& f : *shape.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

Shape rotate_about_vertical(const Shape& shape, double degrees) {
  const Eigen::Matrix3d rotation =
      Eigen::AngleAxisd(degrees * EIGEN_PI / 180.0, Vec3::UnitY()).toRotationMatrix();
  Shape out = shape;
  for (auto& v : out.vertices) v = rotation * v;
  out.normalization = {};
  out.bbox_diagonal = bbox_diagonal(out.vertices);
  return out;
}

}  // namespace diff3f
