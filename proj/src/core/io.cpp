#include "core/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "core/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace b3d {

namespace {

void append_bytes(std::string& out, const void* data, std::size_t n) {
  out.append(static_cast<const char*>(data), n);
}

template <typename T>
void append_scalar(std::string& out, T value) {
  append_bytes(out, &value, sizeof(T));
}

class ByteReader {
 public:
  ByteReader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  template <typename T>
  T read() {
    T value;
    require(pos_ + sizeof(T) <= data_.size(), ErrorCode::io,
            path_ + ": truncated file");
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void expect_magic(const char magic[4]) {
    require(pos_ + 4 <= data_.size(), ErrorCode::io, path_ + ": truncated file");
    require(std::memcmp(data_.data() + pos_, magic, 4) == 0, ErrorCode::io,
            path_ + ": bad magic bytes");
    pos_ += 4;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot open for writing: " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out.good()) {
      out.close();
      std::remove(tmp.c_str());
      fail(ErrorCode::io, "write failed: " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    fail(ErrorCode::io, "rename failed: " + path + ": " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  require(in.good() || in.eof(), ErrorCode::io, "read failed: " + path);
  return buf.str();
}

void save_depth_image(const DepthImage& img, const std::string& path) {
  require(img.depth.size() ==
              static_cast<std::size_t>(img.width) * img.height,
          ErrorCode::invalid, "depth image size mismatch");
  std::string out;
  out.reserve(12 + img.depth.size() * 4);
  append_bytes(out, "SDPT", 4);
  append_scalar<std::uint32_t>(out, img.width);
  append_scalar<std::uint32_t>(out, img.height);
  for (float z : img.depth) append_scalar(out, z);
  write_file_atomic(path, out);
}

DepthImage load_depth_image(const std::string& path) {
  const std::string data = read_file(path);
  ByteReader reader(data, path);
  reader.expect_magic("SDPT");
  DepthImage img;
  img.width = reader.read<std::uint32_t>();
  img.height = reader.read<std::uint32_t>();
  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  require(data.size() == 12 + count * 4, ErrorCode::io, path + ": size mismatch");
  img.depth.resize(count);
  for (std::size_t i = 0; i < count; ++i) img.depth[i] = reader.read<float>();
  return img;
}

void save_voxel_grid(const VoxelGrid& grid, const std::string& path) {
  std::string out;
  out.reserve(24 + grid.occupied.size() * 12);
  append_bytes(out, "SVOX", 4);
  append_scalar<float>(out, static_cast<float>(grid.resolution));
  for (int i = 0; i < 3; ++i)
    append_scalar<float>(out, static_cast<float>(grid.origin[i]));
  append_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(grid.occupied.size()));
  for (const Vec3i& v : grid.occupied)
    for (int i = 0; i < 3; ++i) append_scalar<std::int32_t>(out, v[i]);
  write_file_atomic(path, out);
}

VoxelGrid load_voxel_grid(const std::string& path) {
  const std::string data = read_file(path);
  ByteReader reader(data, path);
  reader.expect_magic("SVOX");
  VoxelGrid grid;
  grid.resolution = reader.read<float>();
  for (int i = 0; i < 3; ++i) grid.origin[i] = reader.read<float>();
  const auto count = reader.read<std::uint32_t>();
  require(data.size() == 24 + static_cast<std::size_t>(count) * 12, ErrorCode::io,
          path + ": size mismatch");
  grid.occupied.resize(count);
  for (std::uint32_t i = 0; i < count; ++i)
    for (int axis = 0; axis < 3; ++axis)
      grid.occupied[i][axis] = reader.read<std::int32_t>();
  require(grid.resolution > 0, ErrorCode::io, path + ": non-positive resolution");
  return grid;
}

Json pose_to_json(const Pose& p) {
  return Json{{"rotation", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}},
              {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

Pose pose_from_json(const Json& j) {
  require(j.contains("rotation") && j.contains("translation"), ErrorCode::config,
          "pose JSON requires 'rotation' and 'translation'");
  const auto& r = j.at("rotation");
  const auto& t = j.at("translation");
  require(r.is_array() && r.size() == 4, ErrorCode::config,
          "pose rotation must be [w,x,y,z]");
  require(t.is_array() && t.size() == 3, ErrorCode::config,
          "pose translation must be [x,y,z]");
  Pose p;
  p.rotation = Quat(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                    r[3].get<double>());
  require(std::abs(p.rotation.norm() - 1.0) < 1e-6, ErrorCode::config,
          "pose rotation must be a unit quaternion");
  p.rotation.normalize();
  p.translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
  return p;
}

Json intrinsics_to_json(const CameraIntrinsics& k) {
  return Json{{"fx", k.fx},       {"fy", k.fy},   {"cx", k.cx},
              {"cy", k.cy},       {"width", k.width}, {"height", k.height},
              {"near", k.near},   {"far", k.far}};
}

CameraIntrinsics intrinsics_from_json(const Json& j) {
  CameraIntrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<std::uint32_t>();
    k.height = j.at("height").get<std::uint32_t>();
    k.near = j.at("near").get<double>();
    k.far = j.at("far").get<double>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::config, std::string("bad intrinsics JSON: ") + e.what());
  }
  k.validate();
  return k;
}

Json load_json_file(const std::string& path) {
  const std::string text = read_file(path);
  Json j = Json::parse(text, nullptr, false);
  require(!j.is_discarded(), ErrorCode::config, path + ": invalid JSON");
  return j;
}

void save_json_file(const Json& j, const std::string& path) {
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace b3d
