#include "support/shapes.hpp"

#include <cmath>

#include "core/error.hpp"

namespace b3d::test {

VoxelGrid grid_from_voxels(std::vector<Vec3i> voxels, double resolution) {
  require(!voxels.empty(), ErrorCode::invalid, "grid_from_voxels: no voxels");
  Vec3i lo = voxels.front(), hi = voxels.front();
  for (const Vec3i& v : voxels) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  VoxelGrid grid;
  grid.resolution = resolution;
  grid.origin =
      Vec3(-resolution * (lo.x() + (hi.x() - lo.x() + 1) / 2.0),
           -resolution * (lo.y() + (hi.y() - lo.y() + 1) / 2.0),
           -resolution * lo.z());
  grid.occupied = std::move(voxels);
  auto less = [](const Vec3i& a, const Vec3i& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(),
                                        b.data() + 3);
  };
  std::sort(grid.occupied.begin(), grid.occupied.end(), less);
  grid.occupied.erase(std::unique(grid.occupied.begin(), grid.occupied.end()),
                      grid.occupied.end());
  return grid;
}

VoxelGrid box_grid(int nx, int ny, int nz, double resolution) {
  std::vector<Vec3i> voxels;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) voxels.emplace_back(x, y, z);
  return grid_from_voxels(std::move(voxels), resolution);
}

VoxelGrid centered_cube_grid(int n, double resolution) {
  VoxelGrid grid = box_grid(n, n, n, resolution);
  grid.origin.z() = -resolution * n / 2.0;
  return grid;
}

VoxelGrid lblock_grid(double resolution) {
  std::vector<Vec3i> voxels;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 2; ++z) voxels.emplace_back(x, y, z);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 2; z < 5; ++z) voxels.emplace_back(x, y, z);
  return grid_from_voxels(std::move(voxels), resolution);
}

VoxelGrid mug_grid(double resolution, bool with_handle) {
  std::vector<Vec3i> voxels;
  const double cx = 3.5, cy = 3.5;
  const double r_outer = 4.0, r_inner = 2.9;
  const int height = 8;
  for (int x = 0; x < 8; ++x) {
    for (int y = 0; y < 8; ++y) {
      const double d = std::hypot(x - cx, y - cy);
      if (d > r_outer) continue;
      voxels.emplace_back(x, y, 0);  // bottom
      if (d >= r_inner)
        for (int z = 1; z < height; ++z) voxels.emplace_back(x, y, z);
    }
  }
  if (with_handle) {
    for (int x = 8; x < 11; ++x)
      for (int y = 3; y < 5; ++y)
        for (int z = 2; z < 6; ++z) voxels.emplace_back(x, y, z);
  }
  return grid_from_voxels(std::move(voxels), resolution);
}

VoxelGrid dumbbell_grid(double resolution) {
  std::vector<Vec3i> voxels;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 4; ++z) {
        voxels.emplace_back(x, y, z);
        voxels.emplace_back(x + 10, y, z);
      }
  for (int x = 4; x < 10; ++x)
    for (int y = 1; y < 3; ++y)
      for (int z = 1; z < 3; ++z) voxels.emplace_back(x, y, z);
  return grid_from_voxels(std::move(voxels), resolution);
}

VoxelGrid hammer_grid(double resolution) {
  std::vector<Vec3i> voxels;
  for (int x = 0; x < 14; ++x)
    for (int y = 1; y < 3; ++y)
      for (int z = 0; z < 2; ++z) voxels.emplace_back(x, y, z);
  for (int x = 10; x < 14; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 4; ++z) voxels.emplace_back(x, y, z);
  return grid_from_voxels(std::move(voxels), resolution);
}

VoxelGrid occluder_grid(double resolution) {
  return box_grid(20, 2, 16, resolution);
}

std::vector<VoxelGrid> ablation_grids(double resolution) {
  std::vector<VoxelGrid> grids;
  grids.push_back(box_grid(6, 6, 6, resolution));
  grids.push_back(lblock_grid(resolution));
  grids.push_back(mug_grid(resolution, true));
  grids.push_back(cylinder_grid(resolution));
  grids.push_back(dumbbell_grid(resolution));
  grids.push_back(hammer_grid(resolution));
  {  // tee
    std::vector<Vec3i> v;
    for (int x = 0; x < 10; ++x)
      for (int y = 0; y < 3; ++y)
        for (int z = 0; z < 2; ++z) v.emplace_back(x, y, z);
    for (int x = 4; x < 6; ++x)
      for (int y = 3; y < 9; ++y)
        for (int z = 0; z < 2; ++z) v.emplace_back(x, y, z);
    grids.push_back(grid_from_voxels(std::move(v), resolution));
  }
  {  // cross
    std::vector<Vec3i> v;
    for (int x = 0; x < 9; ++x)
      for (int y = 3; y < 6; ++y)
        for (int z = 0; z < 2; ++z) v.emplace_back(x, y, z);
    for (int x = 3; x < 6; ++x)
      for (int y = 0; y < 9; ++y)
        for (int z = 0; z < 2; ++z) v.emplace_back(x, y, z);
    grids.push_back(grid_from_voxels(std::move(v), resolution));
  }
  {  // u-channel
    std::vector<Vec3i> v;
    for (int x = 0; x < 8; ++x)
      for (int y = 0; y < 5; ++y)
        for (int z = 0; z < 2; ++z) v.emplace_back(x, y, z);
    for (int x : {0, 1, 6, 7})
      for (int y = 0; y < 5; ++y)
        for (int z = 2; z < 6; ++z) v.emplace_back(x, y, z);
    grids.push_back(grid_from_voxels(std::move(v), resolution));
  }
  {  // steps
    std::vector<Vec3i> v;
    for (int x = 0; x < 9; ++x)
      for (int y = 0; y < 4; ++y)
        for (int z = 0; z < 1 + 2 * (x / 3); ++z) v.emplace_back(x, y, z);
    grids.push_back(grid_from_voxels(std::move(v), resolution));
  }
  return grids;
}

std::shared_ptr<const ObjectModel> make_model(int id, VoxelGrid grid) {
  return std::make_shared<ObjectModel>(ObjectModel::from_grid(id, std::move(grid)));
}

Library single_object_library(VoxelGrid grid) {
  return {make_model(0, std::move(grid))};
}

}  // namespace b3d::test
