#include "colgrade/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

#include "bytes.hpp"

namespace colgrade {

void Volume3D::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw ShapeError("Volume3D: dims must be >= 1");
    if (!(spacing[a] > 0.0f)) throw ShapeError("Volume3D: spacing must be > 0");
  }
  const std::size_t expected =
      static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (data.size() != expected)
    throw ShapeError("Volume3D: data length does not match dims");
  for (float v : data) {
    if (!std::isfinite(v)) throw DataError("Volume3D: non-finite voxel");
  }
}

// --- VVOL I/O -----------------------------------------------------------

void save_vvol(const Volume3D& vol, const std::string& path) {
  vol.validate();
  std::string buf;
  buf.reserve(30 + vol.data.size() * 4);
  buf.append("VVOL");
  bytes::put_u16(buf, 1);
  for (int a = 0; a < 3; ++a)
    bytes::put_u32(buf, static_cast<std::uint32_t>(vol.dims[a]));
  for (int a = 0; a < 3; ++a) bytes::put_f32(buf, vol.spacing[a]);
  for (float v : vol.data) bytes::put_f32(buf, v);
  bytes::write_file(path, buf, "VVOL");
}

Volume3D load_vvol(const std::string& path) {
  const std::string buf = bytes::read_file(path, "VVOL");
  bytes::Reader r(buf, "VVOL");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "VVOL", 4) != 0) throw FormatError("VVOL: bad magic");
  const std::uint16_t version = r.u16();
  if (version != 1) throw FormatError("VVOL: unsupported version");

  Volume3D vol;
  for (int a = 0; a < 3; ++a) {
    const std::uint32_t d = r.u32();
    if (d < 1 || d > (1u << 24)) throw FormatError("VVOL: implausible dimension");
    vol.dims[a] = static_cast<int>(d);
  }
  for (int a = 0; a < 3; ++a) vol.spacing[a] = r.f32();

  const std::size_t n =
      static_cast<std::size_t>(vol.dims[0]) * vol.dims[1] * vol.dims[2];
  if (r.remaining() != n * 4) throw FormatError("VVOL: truncated payload");
  vol.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = r.f32();
    if (!std::isfinite(v)) throw DataError("VVOL: non-finite voxel");
    vol.data[i] = v;
  }
  vol.validate();
  return vol;
}

// --- Isotropic resampling ------------------------------------------------

namespace {

// Cubic B-spline prefilter, clamped (edge-replicating) boundary. Converts
// samples into spline coefficients in place.
void bspline_coefficients(std::vector<double>& c) {
  const std::size_t n = c.size();
  if (n < 2) return;
  const double z = std::sqrt(3.0) - 2.0;
  c[0] = c[0] / (1.0 - z);
  for (std::size_t i = 1; i < n; ++i) c[i] = c[i] + z * c[i - 1];
  c[n - 1] = z * c[n - 1] / (z - 1.0);
  for (std::size_t i = n - 1; i-- > 0;) c[i] = z * (c[i + 1] - c[i]);
  for (auto& v : c) v *= 6.0;
}

double bspline_eval(const std::vector<double>& c, double u) {
  const int n = static_cast<int>(c.size());
  if (n == 1) return c[0];  // unfiltered single sample
  u = std::clamp(u, 0.0, static_cast<double>(n - 1));
  int i = static_cast<int>(std::floor(u));
  if (i > n - 2) i = n - 2;
  const double t = u - i;
  const double t2 = t * t, t3 = t2 * t;
  const double w0 = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
  const double w1 = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
  const double w2 = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
  const double w3 = t3 / 6.0;
  auto cc = [&](int j) { return c[std::clamp(j, 0, n - 1)]; };
  return w0 * cc(i - 1) + w1 * cc(i) + w2 * cc(i + 1) + w3 * cc(i + 2);
}

// Resamples one axis of the volume onto new_n samples spaced target mm apart.
Volume3D resample_axis(const Volume3D& vol, int axis, int new_n, double target) {
  std::array<int, 3> nd = vol.dims;
  const int old_n = nd[axis];
  nd[axis] = new_n;
  std::array<float, 3> ns = vol.spacing;
  ns[axis] = static_cast<float>(target);
  Volume3D out(nd, ns);

  const double scale = target / vol.spacing[axis];

  // Iterate over all lines along `axis`.
  std::array<int, 3> o{};  // other two axes
  int k = 0;
  for (int a = 0; a < 3; ++a)
    if (a != axis) o[k++] = a;

  std::vector<double> line(static_cast<std::size_t>(old_n));
  std::array<int, 3> idx{};
  for (int j1 = 0; j1 < vol.dims[o[1]]; ++j1) {
    for (int j0 = 0; j0 < vol.dims[o[0]]; ++j0) {
      idx[o[0]] = j0;
      idx[o[1]] = j1;
      for (int i = 0; i < old_n; ++i) {
        idx[axis] = i;
        line[static_cast<std::size_t>(i)] = vol.at(idx[0], idx[1], idx[2]);
      }
      bspline_coefficients(line);
      for (int i = 0; i < new_n; ++i) {
        idx[axis] = i;
        out.at(idx[0], idx[1], idx[2]) =
            static_cast<float>(bspline_eval(line, i * scale));
      }
    }
  }
  return out;
}

}  // namespace

Volume3D resample_isotropic(const Volume3D& vol, double target_mm) {
  vol.validate();
  if (!(target_mm > 0.0)) throw ResampleError("resample: target must be > 0");
  for (int a = 0; a < 3; ++a) {
    const double extent = static_cast<double>(vol.dims[a] - 1) * vol.spacing[a];
    if (target_mm > extent)
      throw ResampleError("resample: target exceeds physical extent of axis " +
                          std::to_string(a));
  }

  Volume3D cur = vol;
  for (int axis = 2; axis >= 0; --axis) {
    const double s = cur.spacing[axis];
    // Spacing lives in f32; compare at f32 resolution.
    if (std::abs(s - target_mm) <= 1e-6 * target_mm) {
      cur.spacing[axis] = static_cast<float>(target_mm);
      continue;
    }
    const int n = cur.dims[axis];
    const int new_n =
        static_cast<int>(std::llround((n - 1) * s / target_mm)) + 1;
    cur = resample_axis(cur, axis, new_n, target_mm);
  }
  return cur;
}

Volume3D apply_mask(const Volume3D& vol, const Volume3D& mask) {
  if (vol.dims != mask.dims)
    throw ShapeError("apply_mask: volume and mask dims differ");
  Volume3D out = vol;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (!(mask.data[i] > 0.5f)) out.data[i] = 0.0f;
  }
  return out;
}

Cube extract_cube(const std::vector<const Volume3D*>& vols,
                  const CubeState& state) {
  if (vols.empty()) throw ShapeError("extract_cube: no volumes");
  const auto dims = vols[0]->dims;
  for (const Volume3D* v : vols) {
    if (v->dims != dims) throw ShapeError("extract_cube: volume dims differ");
  }
  if (!state.fits(dims))
    throw BoundsError("extract_cube: cube does not fit inside volume");

  Cube cube;
  cube.edge = state.edge;
  cube.channels.reserve(vols.size());
  const int e = state.edge;
  for (const Volume3D* v : vols) {
    std::vector<float> ch(cube.voxels_per_channel());
    std::size_t w = 0;
    for (int z = 0; z < e; ++z) {
      for (int y = 0; y < e; ++y) {
        const std::size_t base = v->index(state.corner[0], state.corner[1] + y,
                                          state.corner[2] + z);
        for (int x = 0; x < e; ++x) ch[w++] = v->data[base + x];
      }
    }
    cube.channels.push_back(std::move(ch));
  }
  return cube;
}

CubeState mirror_corner(const CubeState& state, const std::array<int, 3>& dims) {
  CubeState m = state;
  m.corner[0] = dims[0] - (state.corner[0] + state.edge);
  return m;
}

Cube normalize_unit(const Cube& cube) {
  Cube out;
  out.edge = cube.edge;
  out.channels.reserve(cube.channels.size());
  for (const auto& ch : cube.channels) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (float v : ch) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    std::vector<float> norm(ch.size(), 0.0f);
    if (hi > lo) {
      const float inv = 1.0f / (hi - lo);
      for (std::size_t i = 0; i < ch.size(); ++i) norm[i] = (ch[i] - lo) * inv;
    }
    out.channels.push_back(std::move(norm));
  }
  return out;
}

}  // namespace colgrade
