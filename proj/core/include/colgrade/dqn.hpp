#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "colgrade/nn.hpp"
#include "colgrade/roi_env.hpp"
#include "colgrade/volume.hpp"

namespace colgrade {

// Q-learning hyper-parameters. Exploration decays linearly from eps_start to
// eps_end over the first half of the episodes, then stays at eps_end.
struct AgentConfig {
  double gamma = 0.9;  // future-reward discount, in [0,1]
  double eps_start = 1.0;
  double eps_end = 0.1;
  int episodes = 400;
  int batch = 32;
  int replay_capacity = 10000;
  int train_every = 4;    // environment steps per TD update
  int target_sync = 200;  // TD updates per target-network refresh
  int pool = 16;          // observation grid side, capped at the cube edge
  nn::SgdConfig sgd{0.001, 1e-6, 0.9};
};

// One observation channel: the cube contents at a visited state, box-averaged
// to pool^3 and min-max normalized to [0,1]. Shared between the consecutive
// observations that overlap on it.
using Frame = std::shared_ptr<const std::vector<float>>;

// The last history_len visited states, oldest first; episode starts pad by
// repeating the initial state.
struct Observation {
  std::vector<Frame> frames;
};

struct Experience {
  Observation before;
  int action = 0;
  float reward = 0.0f;
  Observation after;
  bool terminal = false;
};

// FIFO experience store. Sampling is uniform without replacement within a
// batch; pushes beyond capacity evict the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Experience e);
  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& at(std::size_t i) const { return ring_[i]; }
  std::vector<const Experience*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> ring_;
};

// Q-network plus the observation geometry it was built for.
struct QAgent {
  nn::Network<float> net;
  int pool = 16;
  int history_len = 4;
};

// Box-average resample of an edge^3 block to out_edge^3, out_edge <= edge.
std::vector<float> box_pool(const std::vector<float>& voxels, int edge,
                            int out_edge);

// Pool + normalize the cube at `state`; the state must fit the volume.
Frame pooled_frame(const Volume3D& vol, const CubeState& state, int pool);

// Stacks history_len frames of pool^3 scalars into a (history_len, pool,
// pool, pool) tensor.
nn::Tensor<float> obs_tensor(const Observation& obs, int pool);

// Two stride-2 conv stages into a small dense head with 6 linear outputs.
QAgent build_agent(const EnvConfig& env, const AgentConfig& cfg,
                   std::uint64_t seed);

std::array<float, kNumActions> q_forward(QAgent& agent,
                                         const nn::Tensor<float>& obs);

// Sum of gamma^i * rewards[i].
double discounted_return(const std::vector<double>& rewards, double gamma);

// reward for terminal transitions, reward + gamma * max_a Q_target otherwise.
double bellman_target(const Experience& e, QAgent& target, double gamma);

// Exploration policy: uniform over the 6 actions with probability eps, the
// highest-value action otherwise (ties to the lowest index).
int select_action(const std::array<float, kNumActions>& q, double eps,
                  Rng& rng);

// Mean squared TD error of the taken actions over a batch.
double td_batch_loss(QAgent& agent, QAgent& target,
                     const std::vector<const Experience*>& batch, double gamma);

// One SGD step on the batch TD error (gradient flows only through the taken
// action's output).
void td_update(QAgent& agent, QAgent& target,
               const std::vector<const Experience*>& batch, double gamma,
               nn::Sgd<float>& opt);

struct RoiExample {
  const Volume3D* volume = nullptr;
  CubeState target;
};

// Uniformly random valid cube corner.
CubeState random_start(const std::array<int, 3>& dims, int edge, Rng& rng);

// Full training loop: eps-greedy rollouts, replay, TD updates toward a
// periodically synced target network. Deterministic in `seed`.
QAgent train_agent(const std::vector<RoiExample>& data, const AgentConfig& cfg,
                   const EnvConfig& env, std::uint64_t seed);

struct EpisodeResult {
  CubeState final;
  std::vector<CubeState> trace;  // visited states, start first
};

// Greedy rollout. Stops on oscillation (some state revisited osc_count times
// within the trailing osc_window) or after cfg.max_steps moves; on
// oscillation the final state is the highest-valued oscillating state,
// otherwise the last state visited.
EpisodeResult run_episode(QAgent& agent, const Volume3D& vol,
                          const CubeState& start, const EnvConfig& cfg);

// Same policy driven by an arbitrary per-state scorer.
using QFn = std::function<std::array<float, kNumActions>(const CubeState&)>;
EpisodeResult run_episode(const QFn& q, const std::array<int, 3>& dims,
                          const CubeState& start, const EnvConfig& cfg);

// Coordinate-wise median of the corners (mean of the middle pair for even
// counts), rounded and clamped to a valid corner.
CubeState median_corner(const std::vector<CubeState>& finals,
                        const std::array<int, 3>& dims);

// Runs n_starts greedy episodes from random starts and aggregates the
// terminal corners with median_corner. Deterministic in `seed`.
CubeState localize(QAgent& agent, const Volume3D& vol, const EnvConfig& cfg,
                   int n_starts, std::uint64_t seed);

}  // namespace colgrade
