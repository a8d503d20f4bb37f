#include "colgrade/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "colgrade/errors.hpp"
#include "colgrade/rng.hpp"

namespace colgrade {

namespace {

double hash01(std::uint64_t seed, int x, int y, int z) {
  std::uint64_t h = seed;
  h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) |
                 (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y)) << 32)));
  h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(z)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Seeded lattice value noise, one octave. Adds amp * (2*n - 1), n in [0,1].
void add_value_noise(Volume3D& vol, std::uint64_t seed, int cell, double amp) {
  const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];
  const int lx = nx / cell + 2, ly = ny / cell + 2, lz = nz / cell + 2;

  std::vector<double> lattice(static_cast<std::size_t>(lx) * ly * lz);
  for (int z = 0; z < lz; ++z)
    for (int y = 0; y < ly; ++y)
      for (int x = 0; x < lx; ++x)
        lattice[static_cast<std::size_t>(x) + lx * (y + static_cast<std::size_t>(ly) * z)] =
            hash01(seed, x, y, z);

  auto lat = [&](int x, int y, int z) {
    return lattice[static_cast<std::size_t>(x) +
                   lx * (y + static_cast<std::size_t>(ly) * z)];
  };

  const double inv = 1.0 / cell;
  std::size_t w = 0;
  for (int z = 0; z < nz; ++z) {
    const double uz = z * inv;
    const int iz = static_cast<int>(uz);
    const double tz = smoothstep(uz - iz);
    for (int y = 0; y < ny; ++y) {
      const double uy = y * inv;
      const int iy = static_cast<int>(uy);
      const double ty = smoothstep(uy - iy);
      for (int x = 0; x < nx; ++x) {
        const double ux = x * inv;
        const int ix = static_cast<int>(ux);
        const double tx = smoothstep(ux - ix);

        const double c00 = lat(ix, iy, iz) + tx * (lat(ix + 1, iy, iz) - lat(ix, iy, iz));
        const double c10 = lat(ix, iy + 1, iz) + tx * (lat(ix + 1, iy + 1, iz) - lat(ix, iy + 1, iz));
        const double c01 = lat(ix, iy, iz + 1) + tx * (lat(ix + 1, iy, iz + 1) - lat(ix, iy, iz + 1));
        const double c11 = lat(ix, iy + 1, iz + 1) + tx * (lat(ix + 1, iy + 1, iz + 1) - lat(ix, iy + 1, iz + 1));
        const double c0 = c00 + ty * (c10 - c00);
        const double c1 = c01 + ty * (c11 - c01);
        const double n = c0 + tz * (c1 - c0);
        vol.data[w++] += static_cast<float>(amp * (2.0 * n - 1.0));
      }
    }
  }
}

Volume3D noise_map(const std::array<int, 3>& dims, std::uint64_t seed) {
  Volume3D v(dims, {1.0f, 1.0f, 1.0f}, 1.0f);
  const int n = *std::min_element(dims.begin(), dims.end());
  const int cell1 = std::max(4, n / 4);
  const int cell2 = std::max(2, n / 8);
  add_value_noise(v, mix64(seed ^ 0xa5a5a5a5ULL), cell1, 0.15);
  add_value_noise(v, mix64(seed ^ 0x5a5a5a5aULL), cell2, 0.075);
  return v;
}

}  // namespace

std::array<double, 3> brain_center(const std::array<int, 3>& dims) {
  return {0.5 * (dims[0] - 1), 0.5 * (dims[1] - 1), 0.5 * (dims[2] - 1)};
}

std::array<double, 3> brain_semi_axes(const std::array<int, 3>& dims) {
  return {0.45 * dims[0], 0.45 * dims[1], 0.45 * dims[2]};
}

Phantom gen_phantom(const PhantomSpec& spec) {
  if (spec.grade < 0 || spec.grade > 2)
    throw SpecError("gen_phantom: grade must be in {0,1,2}");
  for (int a = 0; a < 3; ++a) {
    if (spec.dims[a] < 8) throw SpecError("gen_phantom: dims too small");
    if (!(spec.lesion_radii[a] > 0))
      throw SpecError("gen_phantom: lesion radii must be > 0");
  }
  if (spec.roi_edge < 1 || spec.roi_edge > *std::min_element(spec.dims.begin(), spec.dims.end()))
    throw SpecError("gen_phantom: roi_edge does not fit inside dims");

  const auto bc = brain_center(spec.dims);
  const auto bs = brain_semi_axes(spec.dims);

  // Sufficient containment check: center offset plus the worst-case lesion
  // extent, both in brain-normalized coordinates, must stay inside the unit
  // ball.
  double center_norm = 0.0, radius_norm = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = (spec.lesion_center[a] - bc[a]) / bs[a];
    center_norm += d * d;
    const double r = spec.lesion_radii[a] / bs[a];
    radius_norm += r * r;
  }
  if (std::sqrt(center_norm) + std::sqrt(radius_norm) > 1.0)
    throw SpecError("gen_phantom: lesion not inside brain ellipsoid");

  Phantom ph;
  ph.label = spec.grade;
  ph.tmax = noise_map(spec.dims, mix64(spec.seed ^ 0x71c0ffeeULL));
  ph.rbf = noise_map(spec.dims, mix64(spec.seed ^ 0x2b10dbadULL));
  ph.rbv = noise_map(spec.dims, mix64(spec.seed ^ 0x3c44e011ULL));

  const double mt = spec.contrast.tmax[spec.grade];
  const double mf = spec.contrast.rbf[spec.grade];
  const double mv = spec.contrast.rbv[spec.grade];

  std::size_t w = 0;
  for (int z = 0; z < spec.dims[2]; ++z) {
    for (int y = 0; y < spec.dims[1]; ++y) {
      for (int x = 0; x < spec.dims[0]; ++x, ++w) {
        const double dxb = (x - bc[0]) / bs[0];
        const double dyb = (y - bc[1]) / bs[1];
        const double dzb = (z - bc[2]) / bs[2];
        if (dxb * dxb + dyb * dyb + dzb * dzb > 1.0) {
          ph.tmax.data[w] = 0.0f;
          ph.rbf.data[w] = 0.0f;
          ph.rbv.data[w] = 0.0f;
          continue;
        }
        const double dxl = (x - spec.lesion_center[0]) / spec.lesion_radii[0];
        const double dyl = (y - spec.lesion_center[1]) / spec.lesion_radii[1];
        const double dzl = (z - spec.lesion_center[2]) / spec.lesion_radii[2];
        if (dxl * dxl + dyl * dyl + dzl * dzl <= 1.0) {
          ph.tmax.data[w] = static_cast<float>(ph.tmax.data[w] * mt);
          ph.rbf.data[w] = static_cast<float>(ph.rbf.data[w] * mf);
          ph.rbv.data[w] = static_cast<float>(ph.rbv.data[w] * mv);
        }
      }
    }
  }

  CubeState roi;
  roi.edge = spec.roi_edge;
  for (int a = 0; a < 3; ++a) {
    const int c = static_cast<int>(std::llround(spec.lesion_center[a])) - spec.roi_edge / 2;
    roi.corner[a] = std::clamp(c, 0, spec.dims[a] - spec.roi_edge);
  }
  ph.roi = roi;
  return ph;
}

std::vector<PhantomSpec> gen_dataset_specs(const std::array<int, 3>& n_per_class,
                                           std::uint64_t seed,
                                           const std::array<int, 3>& dims,
                                           int roi_edge) {
  for (int c : n_per_class) {
    if (c < 0) throw SpecError("gen_dataset: counts must be >= 0");
  }

  // Round-robin class order so small prefixes stay mixed.
  std::vector<int> labels;
  std::array<int, 3> left = n_per_class;
  while (left[0] + left[1] + left[2] > 0) {
    for (int g = 0; g < 3; ++g) {
      if (left[g] > 0) {
        labels.push_back(g);
        --left[g];
      }
    }
  }

  const auto bc = brain_center(dims);
  const int n_min = *std::min_element(dims.begin(), dims.end());

  std::vector<PhantomSpec> specs;
  specs.reserve(labels.size());
  Rng master(seed);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    PhantomSpec s;
    s.seed = master.derive(i);
    s.dims = dims;
    s.grade = labels[i];
    s.roi_edge = roi_edge;
    Rng local(s.seed);
    const double max_off = 0.09 * n_min;
    for (int a = 0; a < 3; ++a)
      s.lesion_center[a] = bc[a] + local.uniform(-max_off, max_off);
    for (int a = 0; a < 3; ++a)
      s.lesion_radii[a] = local.uniform(0.10 * n_min, 0.15 * n_min);
    specs.push_back(s);
  }
  return specs;
}

std::vector<Phantom> gen_dataset(const std::array<int, 3>& n_per_class,
                                 std::uint64_t seed,
                                 const std::array<int, 3>& dims, int roi_edge) {
  const auto specs = gen_dataset_specs(n_per_class, seed, dims, roi_edge);
  std::vector<Phantom> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(gen_phantom(s));
  return out;
}

}  // namespace colgrade
