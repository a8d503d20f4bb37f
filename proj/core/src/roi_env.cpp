#include "colgrade/roi_env.hpp"

#include <algorithm>
#include <cstdint>

namespace colgrade {

double iou(const CubeState& a, const CubeState& b) {
  std::int64_t inter = 1;
  for (int ax = 0; ax < 3; ++ax) {
    const int lo = std::max(a.corner[ax], b.corner[ax]);
    const int hi = std::min(a.corner[ax] + a.edge, b.corner[ax] + b.edge);
    if (hi <= lo) return 0.0;
    inter *= hi - lo;
  }
  const std::int64_t va = static_cast<std::int64_t>(a.edge) * a.edge * a.edge;
  const std::int64_t vb = static_cast<std::int64_t>(b.edge) * b.edge * b.edge;
  return static_cast<double>(inter) / static_cast<double>(va + vb - inter);
}

int reward(const CubeState& s_before, const CubeState& s_after,
           const CubeState& target) {
  return iou(s_after, target) - iou(s_before, target) < 0.0 ? -1 : 1;
}

CubeState step_state(const CubeState& state, Action action,
                     const std::array<int, 3>& dims, const EnvConfig& cfg) {
  static constexpr int axis[6] = {1, 1, 0, 0, 2, 2};
  static constexpr int dir[6] = {-1, 1, -1, 1, 1, -1};
  const int i = static_cast<int>(action);
  CubeState next = state;
  next.corner[axis[i]] += dir[i] * cfg.step;
  return next.fits(dims) ? next : state;
}

bool train_done(const CubeState& state, const CubeState& target, double tau) {
  return iou(state, target) >= tau;
}

bool detect_oscillation(const std::vector<CubeState>& history, int window,
                        int count) {
  const std::size_t n = history.size();
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(window));
  for (std::size_t i = n - w; i < n; ++i) {
    int seen = 0;
    for (std::size_t j = i; j < n; ++j)
      if (history[j] == history[i]) ++seen;
    if (seen >= count) return true;
  }
  return false;
}

Transition apply_action(const CubeState& state, Action action,
                        const CubeState& target,
                        const std::array<int, 3>& dims, const EnvConfig& cfg) {
  Transition t;
  t.state_before = state;
  t.action = action;
  t.state_after = step_state(state, action, dims, cfg);
  t.reward = (t.state_after == state) ? -1 : reward(state, t.state_after, target);
  t.terminal = train_done(t.state_after, target, cfg.tau);
  return t;
}

}  // namespace colgrade
