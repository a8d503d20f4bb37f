#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "colgrade/volume.hpp"

namespace colgrade {

// --- 3D local binary patterns -------------------------------------------
//
// A voxel's code thresholds its 26 neighbors against the center value
// (bit = 1 when neighbor >= center). Neighbors are scanned z, then y, then
// x ascending with the center skipped; the first neighbor lands in the most
// significant bit, so the code reads like the written bit string.

inline constexpr int kLbpCodeBits = 26;
inline constexpr int kLbpBins = 653;  // 652 uniform codes + 1 merged bin

// Adjacent differing bit pairs in the linear (non-circular) nbits string.
int lbp_transitions(std::uint32_t code, int nbits = kLbpCodeBits);

// Code of the interior voxel (x, y, z); the caller guarantees a full
// neighborhood (1 <= coordinate <= edge-2).
std::uint32_t lbp_code_at(const std::vector<float>& channel, int edge, int x,
                          int y, int z);

// All codes with at most two transitions, sorted ascending. Size 652.
const std::vector<std::uint32_t>& lbp_uniform_codes();

// Bin index for a code: uniform codes get their rank among the sorted
// uniform codes, everything else shares bin 652.
int lbp_bin(std::uint32_t code);

// Histogram over all channels' interior voxels. Pooled across channels by
// default (kLbpBins entries); concat_channels instead lays the per-channel
// histograms side by side (channels * kLbpBins entries). Normalized to sum
// 1 per histogram.
std::vector<double> lbp_histogram(const Cube& cube,
                                  bool concat_channels = false);

// --- 3D histogram of oriented gradients -----------------------------------

inline constexpr int kHogBins = 10;

// Per-voxel filter responses with the 5-tap column kernel [1, 0, -2, 0, 1]
// applied along each axis: g_x(v) = v(x-2) - 2 v(x) + v(x+2) and likewise
// for y, z. The outermost two voxels per axis have no full support and stay
// zero. Note this kernel measures curvature (second difference), not slope;
// it is used verbatim.
std::vector<std::array<double, 3>> hog_gradient_field(
    const std::vector<float>& channel, int edge);

// Ten icosahedron face-normal directions with opposite pairs merged, unit
// length, first nonzero component positive.
const std::array<std::array<double, 3>, kHogBins>& icosahedron_axes();

// Per channel: every interior voxel's response vector votes its full
// magnitude into the axis maximizing |dot|, ties to the lowest axis index;
// the 10 bins are normalized to sum 1 (all zero when the channel is flat).
// Channels concatenate to 3 * 10 = 30 entries.
std::vector<double> hog_histogram(const Cube& cube);

}  // namespace colgrade
