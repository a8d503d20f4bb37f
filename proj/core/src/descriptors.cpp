#include "colgrade/descriptors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "colgrade/errors.hpp"

namespace colgrade {

int lbp_transitions(std::uint32_t code, int nbits) {
  const std::uint32_t mask =
      (nbits >= 32) ? 0x7fffffffu : ((1u << (nbits - 1)) - 1u);
  return std::popcount((code ^ (code >> 1)) & mask);
}

std::uint32_t lbp_code_at(const std::vector<float>& channel, int edge, int x,
                          int y, int z) {
  const float center =
      channel[static_cast<std::size_t>(x) +
              static_cast<std::size_t>(edge) * (y + static_cast<std::size_t>(edge) * z)];
  std::uint32_t code = 0;
  int bit = kLbpCodeBits - 1;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && dy == 0 && dx == 0) continue;
        const float v =
            channel[static_cast<std::size_t>(x + dx) +
                    static_cast<std::size_t>(edge) *
                        ((y + dy) + static_cast<std::size_t>(edge) * (z + dz))];
        if (v >= center) code |= 1u << bit;
        --bit;
      }
  return code;
}

const std::vector<std::uint32_t>& lbp_uniform_codes() {
  static const std::vector<std::uint32_t> codes = [] {
    constexpr int n = kLbpCodeBits;
    std::vector<std::uint32_t> out;
    out.push_back(0u);
    out.push_back((1u << n) - 1u);
    // One transition: 0^a 1^b and 1^a 0^b.
    for (int a = 1; a < n; ++a) {
      const int b = n - a;
      out.push_back((1u << b) - 1u);
      out.push_back(((1u << a) - 1u) << b);
    }
    // Two transitions: 0^a 1^b 0^c and 1^a 0^b 1^c.
    for (int a = 1; a <= n - 2; ++a)
      for (int b = 1; b <= n - a - 1; ++b) {
        const int c = n - a - b;
        out.push_back(((1u << b) - 1u) << c);
        out.push_back((((1u << a) - 1u) << (b + c)) | ((1u << c) - 1u));
      }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }();
  return codes;
}

int lbp_bin(std::uint32_t code) {
  const auto& u = lbp_uniform_codes();
  const auto it = std::lower_bound(u.begin(), u.end(), code);
  if (it != u.end() && *it == code) return static_cast<int>(it - u.begin());
  return static_cast<int>(u.size());
}

std::vector<double> lbp_histogram(const Cube& cube, bool concat_channels) {
  if (cube.edge < 3) throw ShapeError("lbp: cube edge must be >= 3");
  if (cube.channels.empty()) throw ShapeError("lbp: no channels");
  const int nch = static_cast<int>(cube.channels.size());
  const int e = cube.edge;
  const int histograms = concat_channels ? nch : 1;
  std::vector<double> out(static_cast<std::size_t>(histograms) * kLbpBins, 0.0);

  for (int c = 0; c < nch; ++c) {
    const auto& ch = cube.channels[c];
    if (ch.size() != cube.voxels_per_channel())
      throw ShapeError("lbp: channel size does not match edge");
    double* bins = out.data() + (concat_channels ? c * kLbpBins : 0);
    for (int z = 1; z < e - 1; ++z)
      for (int y = 1; y < e - 1; ++y)
        for (int x = 1; x < e - 1; ++x)
          bins[lbp_bin(lbp_code_at(ch, e, x, y, z))] += 1.0;
  }

  for (int h = 0; h < histograms; ++h) {
    double* bins = out.data() + static_cast<std::size_t>(h) * kLbpBins;
    double sum = 0.0;
    for (int i = 0; i < kLbpBins; ++i) sum += bins[i];
    if (sum > 0.0)
      for (int i = 0; i < kLbpBins; ++i) bins[i] /= sum;
  }
  return out;
}

std::vector<std::array<double, 3>> hog_gradient_field(
    const std::vector<float>& channel, int edge) {
  if (edge < 5) throw ShapeError("hog: edge must be >= 5");
  if (channel.size() != static_cast<std::size_t>(edge) * edge * edge)
    throw ShapeError("hog: channel size does not match edge");
  auto at = [&](int x, int y, int z) {
    return static_cast<double>(
        channel[static_cast<std::size_t>(x) +
                static_cast<std::size_t>(edge) *
                    (y + static_cast<std::size_t>(edge) * z)]);
  };
  std::vector<std::array<double, 3>> field(channel.size(), {0.0, 0.0, 0.0});
  for (int z = 2; z < edge - 2; ++z)
    for (int y = 2; y < edge - 2; ++y)
      for (int x = 2; x < edge - 2; ++x) {
        const std::size_t i =
            static_cast<std::size_t>(x) +
            static_cast<std::size_t>(edge) *
                (y + static_cast<std::size_t>(edge) * z);
        const double c2 = -2.0 * at(x, y, z);
        field[i][0] = at(x - 2, y, z) + c2 + at(x + 2, y, z);
        field[i][1] = at(x, y - 2, z) + c2 + at(x, y + 2, z);
        field[i][2] = at(x, y, z - 2) + c2 + at(x, y, z + 2);
      }
  return field;
}

const std::array<std::array<double, 3>, kHogBins>& icosahedron_axes() {
  static const std::array<std::array<double, 3>, kHogBins> axes = [] {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double a = 1.0 / phi, b = phi;
    // Dodecahedron vertices = icosahedron face normals, opposite pairs
    // already merged by canonical sign choice.
    std::array<std::array<double, 3>, kHogBins> raw{{
        {1, 1, 1},
        {1, 1, -1},
        {1, -1, 1},
        {1, -1, -1},
        {0, a, b},
        {0, a, -b},
        {a, b, 0},
        {a, -b, 0},
        {b, 0, a},
        {b, 0, -a},
    }};
    for (auto& v : raw) {
      const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      for (auto& c : v) c /= n;
    }
    return raw;
  }();
  return axes;
}

std::vector<double> hog_histogram(const Cube& cube) {
  if (cube.channels.empty()) throw ShapeError("hog: no channels");
  const auto& axes = icosahedron_axes();
  std::vector<double> out;
  out.reserve(cube.channels.size() * kHogBins);

  for (const auto& ch : cube.channels) {
    const auto field = hog_gradient_field(ch, cube.edge);
    std::array<double, kHogBins> bins{};
    for (const auto& g : field) {
      const double mag =
          std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      if (mag == 0.0) continue;
      int best = 0;
      double best_dot = -1.0;
      for (int k = 0; k < kHogBins; ++k) {
        const double d = std::abs(g[0] * axes[k][0] + g[1] * axes[k][1] +
                                  g[2] * axes[k][2]);
        if (d > best_dot) {
          best_dot = d;
          best = k;
        }
      }
      bins[best] += mag;
    }
    double sum = 0.0;
    for (double v : bins) sum += v;
    for (double v : bins) out.push_back(sum > 0.0 ? v / sum : 0.0);
  }
  return out;
}

}  // namespace colgrade
