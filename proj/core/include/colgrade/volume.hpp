#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "colgrade/errors.hpp"

namespace colgrade {

// 3D scalar grid with millimetre voxel spacing. Data is stored x-fastest:
// index = x + nx*(y + ny*z). Carrier of the perfusion parameter maps.
struct Volume3D {
  std::array<int, 3> dims{0, 0, 0};        // nx, ny, nz
  std::array<float, 3> spacing{1, 1, 1};   // mm
  std::vector<float> data;

  Volume3D() = default;
  Volume3D(std::array<int, 3> d, std::array<float, 3> s, float fill = 0.0f)
      : dims(d), spacing(s),
        data(static_cast<std::size_t>(d[0]) * d[1] * d[2], fill) {}

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }
  float at(int x, int y, int z) const { return data[index(x, y, z)]; }
  float& at(int x, int y, int z) { return data[index(x, y, z)]; }
  std::size_t voxel_count() const { return data.size(); }

  // Throws ShapeError / DataError when the invariants do not hold.
  void validate() const;
};

// Axis-aligned cube: top-left corner voxel plus edge length. Doubles as the
// agent state and the ROI representation.
struct CubeState {
  std::array<int, 3> corner{0, 0, 0};  // cx, cy, cz
  int edge = 64;

  bool fits(const std::array<int, 3>& dims) const {
    for (int a = 0; a < 3; ++a) {
      if (corner[a] < 0 || corner[a] + edge > dims[a]) return false;
    }
    return true;
  }
  friend bool operator==(const CubeState&, const CubeState&) = default;
};

// Dense cube contents, one edge^3 block per channel.
struct Cube {
  std::vector<std::vector<float>> channels;
  int edge = 0;

  std::size_t voxels_per_channel() const {
    return static_cast<std::size_t>(edge) * edge * edge;
  }
};

// --- VVOL file format --------------------------------------------------
//
// magic "VVOL" | u16 version (=1) | 3x u32 dims | 3x f32 spacing |
// nx*ny*nz f32 voxels, x-fastest. All integers and floats little-endian.
// Masks use the same container.
void save_vvol(const Volume3D& vol, const std::string& path);
Volume3D load_vvol(const std::string& path);

// Resamples to isotropic spacing `target_mm` with cubic B-spline
// interpolation (clamped boundary). Axes already at the target spacing are
// copied through untouched; an axis whose physical extent is smaller than
// the target raises ResampleError. New axis length per resampled axis:
// round((n-1)*s/target) + 1.
Volume3D resample_isotropic(const Volume3D& vol, double target_mm);

// Keeps voxels where mask > 0.5, zeroes the rest.
Volume3D apply_mask(const Volume3D& vol, const Volume3D& mask);

// Copies the cube at `state` out of each volume, one channel per volume.
Cube extract_cube(const std::vector<const Volume3D*>& vols,
                  const CubeState& state);

// Reflects the cube across the midsagittal (x) plane: cx' = nx - (cx+edge).
CubeState mirror_corner(const CubeState& state, const std::array<int, 3>& dims);

// Per-channel min-max normalization into [0,1]; constant channels map to
// all zeros.
Cube normalize_unit(const Cube& cube);

}  // namespace colgrade
