#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "colgrade/descriptors.hpp"
#include "colgrade/rng.hpp"
#include "doctest.h"

using namespace colgrade;

namespace {

std::uint32_t code_from_string(const std::string& bits) {
  std::uint32_t c = 0;
  for (char ch : bits) c = (c << 1) | (ch == '1' ? 1u : 0u);
  return c;
}

std::vector<float> make_channel(int edge, float fill = 0.0f) {
  return std::vector<float>(static_cast<std::size_t>(edge) * edge * edge, fill);
}

std::size_t vox(int edge, int x, int y, int z) {
  return static_cast<std::size_t>(x) +
         static_cast<std::size_t>(edge) * (y + static_cast<std::size_t>(edge) * z);
}

Cube random_cube(int edge, int channels, Rng& rng) {
  Cube c;
  c.edge = edge;
  for (int i = 0; i < channels; ++i) {
    auto ch = make_channel(edge);
    for (auto& v : ch) v = static_cast<float>(rng.uniform());
    c.channels.push_back(std::move(ch));
  }
  return c;
}

}  // namespace

TEST_CASE("transition counts match the worked bit strings") {
  CHECK(lbp_transitions(code_from_string("0000"), 4) == 0);
  CHECK(lbp_transitions(code_from_string("000111"), 6) == 1);
  CHECK(lbp_transitions(code_from_string("011100"), 6) == 2);
  CHECK(lbp_transitions(code_from_string("110110"), 6) == 3);
  CHECK(lbp_transitions((1u << 26) - 1u) == 0);  // all ones
  std::uint32_t alternating = 0;
  for (int i = 0; i < 26; i += 2) alternating |= 1u << i;
  CHECK(lbp_transitions(alternating) == 25);
}

TEST_CASE("lbp codes threshold the 26-neighborhood") {
  const int e = 3;
  auto flat = make_channel(e, 2.0f);
  CHECK(lbp_code_at(flat, e, 1, 1, 1) == (1u << 26) - 1u);  // >= keeps ties

  auto peak = make_channel(e, 1.0f);
  peak[vox(e, 1, 1, 1)] = 5.0f;
  CHECK(lbp_code_at(peak, e, 1, 1, 1) == 0u);

  // One neighbor above center: its scan position is the only set bit. The
  // first scanned neighbor is (dx,dy,dz) = (-1,-1,-1) at the most
  // significant bit.
  auto one = make_channel(e, 1.0f);
  one[vox(e, 1, 1, 1)] = 3.0f;
  one[vox(e, 0, 0, 0)] = 7.0f;
  CHECK(lbp_code_at(one, e, 1, 1, 1) == 1u << 25);

  auto last = make_channel(e, 1.0f);
  last[vox(e, 1, 1, 1)] = 3.0f;
  last[vox(e, 2, 2, 2)] = 7.0f;  // last scanned neighbor, least significant
  CHECK(lbp_code_at(last, e, 1, 1, 1) == 1u);
}

TEST_CASE("uniform code table has 653 bins, checked by brute force") {
  const auto& uniform = lbp_uniform_codes();
  CHECK(uniform.size() == 652);
  CHECK(std::is_sorted(uniform.begin(), uniform.end()));

  // Closed form: 2 constant codes + 2*25 one-transition + 2*C(25,2)
  // two-transition.
  CHECK(652 == 2 + 2 * 25 + 2 * (25 * 24 / 2));

  // Full enumeration of all 2^26 codes.
  std::uint64_t count = 0;
  for (std::uint32_t c = 0;; ++c) {
    if (lbp_transitions(c) <= 2) ++count;
    if (c == (1u << 26) - 1u) break;
  }
  CHECK(count == 652);

  CHECK(lbp_bin(0u) == 0);
  CHECK(lbp_bin((1u << 26) - 1u) == 651);
  CHECK(lbp_bin(0u) != lbp_bin((1u << 26) - 1u));
  CHECK(lbp_bin(code_from_string("01010100000000000000000000")) == 652);
  // Every uniform code gets its own rank, everything else the shared bin.
  for (std::size_t i = 0; i < uniform.size(); ++i)
    REQUIRE(lbp_bin(uniform[i]) == static_cast<int>(i));
}

TEST_CASE("constant cube sends all lbp mass to the all-ones bin") {
  Cube c;
  c.edge = 5;
  for (int i = 0; i < 3; ++i) c.channels.push_back(make_channel(5, 3.25f));
  const auto h = lbp_histogram(c);
  REQUIRE(h.size() == static_cast<std::size_t>(kLbpBins));
  const int ones_bin = lbp_bin((1u << 26) - 1u);
  for (int i = 0; i < kLbpBins; ++i)
    CHECK(h[i] == (i == ones_bin ? 1.0 : 0.0));
}

TEST_CASE("lbp histogram normalizes and survives monotone transforms") {
  Rng rng(17);
  auto cube = random_cube(7, 3, rng);
  const auto h = lbp_histogram(cube);
  double sum = 0.0;
  for (double v : h) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  Cube cubed = cube;
  for (auto& ch : cubed.channels)
    for (auto& v : ch) v = v * v * v;
  const auto h3 = lbp_histogram(cubed);
  REQUIRE(h.size() == h3.size());
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == h3[i]);
}

TEST_CASE("lbp concatenated layout keeps channels independent") {
  Rng rng(18);
  auto cube = random_cube(5, 3, rng);
  const auto cat = lbp_histogram(cube, true);
  REQUIRE(cat.size() == static_cast<std::size_t>(3 * kLbpBins));
  for (int c = 0; c < 3; ++c) {
    Cube single;
    single.edge = cube.edge;
    single.channels.push_back(cube.channels[c]);
    const auto h = lbp_histogram(single);
    for (int i = 0; i < kLbpBins; ++i)
      REQUIRE(cat[static_cast<std::size_t>(c) * kLbpBins + i] == h[i]);
  }
}

TEST_CASE("lbp rejects undersized cubes") {
  Cube c;
  c.edge = 2;
  c.channels.push_back(make_channel(2));
  CHECK_THROWS_AS(lbp_histogram(c), ShapeError);
}

TEST_CASE("gradient field is zero on constants and matches the 5-tap oracle") {
  const int e = 9;
  const auto flat = make_channel(e, 4.0f);
  for (const auto& g : hog_gradient_field(flat, e)) {
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
    CHECK(g[2] == 0.0);
  }

  // Full 5x5x5 correlation with the column kernel, written without reusing
  // the implementation's shortcut.
  Rng rng(19);
  auto noisy = make_channel(e);
  for (auto& v : noisy) v = static_cast<float>(rng.uniform(-2.0, 2.0));
  const auto field = hog_gradient_field(noisy, e);
  const double taps[5] = {1.0, 0.0, -2.0, 0.0, 1.0};
  for (int z = 2; z < e - 2; ++z)
    for (int y = 2; y < e - 2; ++y)
      for (int x = 2; x < e - 2; ++x) {
        double gx = 0, gy = 0, gz = 0;
        for (int i = 0; i < 5; ++i) {
          gx += taps[i] * noisy[vox(e, x + i - 2, y, z)];
          gy += taps[i] * noisy[vox(e, x, y + i - 2, z)];
          gz += taps[i] * noisy[vox(e, x, y, z + i - 2)];
        }
        const auto& g = field[vox(e, x, y, z)];
        REQUIRE(g[0] == doctest::Approx(gx).epsilon(1e-12));
        REQUIRE(g[1] == doctest::Approx(gy).epsilon(1e-12));
        REQUIRE(g[2] == doctest::Approx(gz).epsilon(1e-12));
      }
}

TEST_CASE("the 5-tap kernel is a second-difference operator") {
  const int e = 9;
  auto linear = make_channel(e);
  auto quadratic = make_channel(e);
  for (int z = 0; z < e; ++z)
    for (int y = 0; y < e; ++y)
      for (int x = 0; x < e; ++x) {
        linear[vox(e, x, y, z)] = static_cast<float>(x);
        quadratic[vox(e, x, y, z)] = static_cast<float>(x * x);
      }
  for (const auto& g : hog_gradient_field(linear, e)) CHECK(g[0] == 0.0);
  const auto fq = hog_gradient_field(quadratic, e);
  for (int z = 2; z < e - 2; ++z)
    for (int y = 2; y < e - 2; ++y)
      for (int x = 2; x < e - 2; ++x) {
        // (x-2)^2 - 2x^2 + (x+2)^2 = 8 for every x.
        CHECK(fq[vox(e, x, y, z)][0] == doctest::Approx(8.0));
        CHECK(fq[vox(e, x, y, z)][1] == 0.0);
        CHECK(fq[vox(e, x, y, z)][2] == 0.0);
      }
}

TEST_CASE("icosahedron axes are unit, non-parallel, and geometrically exact") {
  const auto& axes = icosahedron_axes();
  for (const auto& v : axes) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < axes.size(); ++i)
    for (std::size_t j = i + 1; j < axes.size(); ++j) {
      const double d = std::abs(axes[i][0] * axes[j][0] +
                                axes[i][1] * axes[j][1] +
                                axes[i][2] * axes[j][2]);
      CHECK(d < 1.0 - 1e-9);
    }

  // Brute-force construction: all 20 dodecahedron vertices, normalized,
  // opposite pairs merged; pairwise |dot| multisets must agree.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<std::array<double, 3>> verts;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) verts.push_back({double(sx), double(sy), double(sz)});
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) {
      verts.push_back({0.0, s1 / phi, s2 * phi});
      verts.push_back({s1 / phi, s2 * phi, 0.0});
      verts.push_back({s1 * phi, 0.0, s2 / phi});
    }
  REQUIRE(verts.size() == 20);
  std::vector<std::array<double, 3>> merged;
  for (auto v : verts) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (auto& c : v) c /= n;
    // canonical sign: first component with |value| > 0 is positive
    std::array<double, 3> canon = v;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(canon[k]) > 1e-12) {
        if (canon[k] < 0)
          for (auto& c : canon) c = -c;
        break;
      }
    }
    bool dup = false;
    for (const auto& m : merged) {
      if (std::abs(m[0] - canon[0]) < 1e-9 && std::abs(m[1] - canon[1]) < 1e-9 &&
          std::abs(m[2] - canon[2]) < 1e-9)
        dup = true;
    }
    if (!dup) merged.push_back(canon);
  }
  REQUIRE(merged.size() == 10);

  auto dots = [](const std::vector<std::array<double, 3>>& vs) {
    std::vector<double> out;
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j)
        out.push_back(std::abs(vs[i][0] * vs[j][0] + vs[i][1] * vs[j][1] +
                               vs[i][2] * vs[j][2]));
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto got = dots({axes.begin(), axes.end()});
  const auto expect = dots(merged);
  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9));
}

TEST_CASE("hog histogram: constant cube gives the zero 30-vector") {
  Cube c;
  c.edge = 7;
  for (int i = 0; i < 3; ++i) c.channels.push_back(make_channel(7, 1.5f));
  const auto h = hog_histogram(c);
  REQUIRE(h.size() == 30);
  for (double v : h) CHECK(v == 0.0);
}

TEST_CASE("hog histogram: 30 non-negative entries, channels normalized") {
  Rng rng(20);
  auto cube = random_cube(9, 3, rng);
  const auto h = hog_histogram(cube);
  REQUIRE(h.size() == 30);
  for (double v : h) CHECK(v >= 0.0);
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (int k = 0; k < 10; ++k) sum += h[static_cast<std::size_t>(c) * 10 + k];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("hog histogram: dominant curvature votes where the oracle says") {
  // v = (r . d)^2 has 5-tap responses proportional to the component-wise
  // squares of d, so the expected bin is computed from that response
  // direction, not from d itself.
  const auto& axes = icosahedron_axes();
  const int e = 11;
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    std::array<double, 3> d{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                            rng.uniform(-1.0, 1.0)};
    const double dn = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    for (auto& v : d) v /= dn;

    auto ch = make_channel(e);
    for (int z = 0; z < e; ++z)
      for (int y = 0; y < e; ++y)
        for (int x = 0; x < e; ++x) {
          const double t = x * d[0] + y * d[1] + z * d[2];
          ch[vox(e, x, y, z)] = static_cast<float>(t * t);
        }

    // Oracle: the filter response of (r.d)^2 along axis i is 8 d_i^2.
    const std::array<double, 3> resp{8 * d[0] * d[0], 8 * d[1] * d[1],
                                     8 * d[2] * d[2]};
    int expect = 0;
    double best = -1.0;
    for (int k = 0; k < 10; ++k) {
      const double dot = std::abs(resp[0] * axes[k][0] + resp[1] * axes[k][1] +
                                  resp[2] * axes[k][2]);
      if (dot > best) {
        best = dot;
        expect = k;
      }
    }

    Cube c;
    c.edge = e;
    c.channels.push_back(ch);
    const auto h = hog_histogram(c);
    REQUIRE(h.size() == 10);
    const int got = static_cast<int>(std::max_element(h.begin(), h.end()) -
                                     h.begin());
    REQUIRE(got == expect);
  }
}

TEST_CASE("hog rejects cubes below the filter support") {
  Cube c;
  c.edge = 4;
  c.channels.push_back(make_channel(4));
  CHECK_THROWS_AS(hog_histogram(c), ShapeError);
}
