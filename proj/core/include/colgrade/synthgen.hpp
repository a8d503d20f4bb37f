#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "colgrade/volume.hpp"

namespace colgrade {

// Lesion-region multipliers applied to the background maps, indexed by
// grade 0/1/2. Grade 0 has the strongest contrast, grade 2 is near-uniform.
struct ContrastProfile {
  std::array<double, 3> tmax{3.0, 2.0, 1.15};
  std::array<double, 3> rbf{0.3, 0.55, 0.9};
  std::array<double, 3> rbv{0.3, 0.55, 0.9};
};

struct PhantomSpec {
  std::uint64_t seed = 0;
  std::array<int, 3> dims{128, 128, 128};
  int grade = 0;                                 // in {0,1,2}
  std::array<double, 3> lesion_center{64, 64, 64};  // voxel coordinates
  std::array<double, 3> lesion_radii{16, 16, 16};   // ellipsoid semi-axes
  ContrastProfile contrast;
  int roi_edge = 64;
};

// One synthetic patient: the three parameter maps, the planted ROI and its
// grade label. Voxels outside the interior brain ellipsoid are exactly zero.
struct Phantom {
  Volume3D tmax;
  Volume3D rbf;
  Volume3D rbv;
  CubeState roi;
  int label = 0;
};

// Brain ellipsoid geometry shared by the generator and its tests.
std::array<double, 3> brain_center(const std::array<int, 3>& dims);
std::array<double, 3> brain_semi_axes(const std::array<int, 3>& dims);

// Deterministic in spec.seed. Throws SpecError when the lesion is not
// entirely inside the brain ellipsoid or the grade is out of range.
Phantom gen_phantom(const PhantomSpec& spec);

// Deterministic dataset plan: exact per-class counts, per-sample seeds and
// lesion geometry derived from the master seed. Materialize each entry with
// gen_phantom.
std::vector<PhantomSpec> gen_dataset_specs(const std::array<int, 3>& n_per_class,
                                           std::uint64_t seed,
                                           const std::array<int, 3>& dims = {128, 128, 128},
                                           int roi_edge = 64);

// Convenience for desk-scale runs: materializes the full plan.
std::vector<Phantom> gen_dataset(const std::array<int, 3>& n_per_class,
                                 std::uint64_t seed,
                                 const std::array<int, 3>& dims = {128, 128, 128},
                                 int roi_edge = 64);

}  // namespace colgrade
