#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "colgrade/volume.hpp"

namespace colgrade {

// Localization environment parameters. The oscillation rule (a state seen
// osc_count times within the trailing osc_window steps) is our
// quantification of the qualitative back-and-forth stopping criterion.
struct EnvConfig {
  int edge = 64;        // cube edge, voxels
  double tau = 0.85;    // training stops once iou(state, target) >= tau
  int step = 1;         // voxels per move
  int history_len = 4;  // stacked frames in an observation
  int max_steps = 200;  // hard episode cap
  int osc_window = 20;
  int osc_count = 4;
};

enum class Action : int { up = 0, down, left, right, forward, backward };
inline constexpr int kNumActions = 6;

struct Transition {
  CubeState state_before;
  Action action = Action::up;
  int reward = 0;  // -1 or +1
  CubeState state_after;
  bool terminal = false;
};

// Intersection over union of two axis-aligned cubes, as voxel sets.
// Symmetric, in [0,1], equals 1 iff the states coincide.
double iou(const CubeState& a, const CubeState& b);

// sign[iou(after, target) - iou(before, target)] with sign(0) = +1.
int reward(const CubeState& s_before, const CubeState& s_after,
           const CubeState& target);

// Moves the corner by +-cfg.step along the action's axis. A move that would
// exit the volume is blocked: the state comes back unchanged.
//   right/left: +-x   down/up: +-y   forward/backward: +-z
CubeState step_state(const CubeState& state, Action action,
                     const std::array<int, 3>& dims, const EnvConfig& cfg);

bool train_done(const CubeState& state, const CubeState& target, double tau);

// True when some state occurs at least `count` times within the trailing
// `window` entries of the visit history.
bool detect_oscillation(const std::vector<CubeState>& history, int window = 20,
                        int count = 4);

// One full environment step: move, score, and flag training termination.
// Blocked moves score -1 directly (an action that changes nothing is not
// progress, even though sign(0) would say otherwise).
Transition apply_action(const CubeState& state, Action action,
                        const CubeState& target,
                        const std::array<int, 3>& dims, const EnvConfig& cfg);

}  // namespace colgrade
