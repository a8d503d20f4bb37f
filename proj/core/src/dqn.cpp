#include "colgrade/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "colgrade/parallel.hpp"

namespace colgrade {

namespace {

void check_agent_config(const AgentConfig& cfg) {
  if (cfg.gamma < 0.0 || cfg.gamma > 1.0)
    throw ConfigError("dqn: gamma must lie in [0,1]");
  if (cfg.episodes < 0) throw ConfigError("dqn: negative episode count");
  if (cfg.batch < 1 || cfg.replay_capacity < 1 || cfg.train_every < 1 ||
      cfg.target_sync < 1 || cfg.pool < 1)
    throw ConfigError("dqn: batch, capacity, periods and pool must be >= 1");
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay: capacity must be >= 1");
}

void ReplayBuffer::push(Experience e) {
  ring_.push_back(std::move(e));
  if (ring_.size() > capacity_) ring_.pop_front();
}

std::vector<const Experience*> ReplayBuffer::sample(std::size_t n,
                                                    Rng& rng) const {
  n = std::min(n, ring_.size());
  std::vector<std::size_t> idx(ring_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<const Experience*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.next_u64() % (idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(&ring_[idx[i]]);
  }
  return out;
}

std::vector<float> box_pool(const std::vector<float>& voxels, int edge,
                            int out_edge) {
  if (out_edge < 1 || out_edge > edge)
    throw ShapeError("box_pool: need 1 <= out_edge <= edge");
  if (voxels.size() != static_cast<std::size_t>(edge) * edge * edge)
    throw ShapeError("box_pool: voxel count does not match edge");
  std::vector<float> out(static_cast<std::size_t>(out_edge) * out_edge *
                         out_edge);
  auto lo = [&](int i) { return i * edge / out_edge; };
  std::size_t w = 0;
  for (int z = 0; z < out_edge; ++z)
    for (int y = 0; y < out_edge; ++y)
      for (int x = 0; x < out_edge; ++x) {
        double sum = 0.0;
        int count = 0;
        for (int iz = lo(z); iz < lo(z + 1); ++iz)
          for (int iy = lo(y); iy < lo(y + 1); ++iy)
            for (int ix = lo(x); ix < lo(x + 1); ++ix) {
              sum += voxels[(static_cast<std::size_t>(iz) * edge + iy) * edge +
                            ix];
              ++count;
            }
        out[w++] = static_cast<float>(sum / count);
      }
  return out;
}

Frame pooled_frame(const Volume3D& vol, const CubeState& state, int pool) {
  if (!state.fits(vol.dims))
    throw ShapeError("pooled_frame: cube exits the volume");
  const Cube cube = extract_cube({&vol}, state);
  auto frame = box_pool(cube.channels[0], state.edge,
                        std::min(pool, state.edge));
  float mn = frame[0], mx = frame[0];
  for (float v : frame) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (mx > mn) {
    const float inv = 1.0f / (mx - mn);
    for (auto& v : frame) v = (v - mn) * inv;
  } else {
    std::fill(frame.begin(), frame.end(), 0.0f);
  }
  return std::make_shared<const std::vector<float>>(std::move(frame));
}

nn::Tensor<float> obs_tensor(const Observation& obs, int pool) {
  const int h = static_cast<int>(obs.frames.size());
  nn::Tensor<float> t({h, pool, pool, pool});
  const auto per = static_cast<std::size_t>(pool) * pool * pool;
  std::size_t w = 0;
  for (const auto& f : obs.frames) {
    if (!f || f->size() != per)
      throw ShapeError("obs_tensor: frame size does not match pool");
    for (float v : *f) t.data[w++] = v;
  }
  return t;
}

QAgent build_agent(const EnvConfig& env, const AgentConfig& cfg,
                   std::uint64_t seed) {
  check_agent_config(cfg);
  QAgent agent;
  agent.pool = std::min(cfg.pool, env.edge);
  agent.history_len = env.history_len;

  auto half = [](int n) { return nn::detail::conv_out_dim(n, 3, 2, 1); };
  const int c1 = half(agent.pool), c2 = half(c1);
  auto& net = agent.net;
  net.add<nn::Conv3d<float>>(env.history_len, 8, 3, 2, 1);
  net.add<nn::Tanh<float>>();
  net.add<nn::Conv3d<float>>(8, 16, 3, 2, 1);
  net.add<nn::Tanh<float>>();
  net.add<nn::Flatten<float>>();
  net.add<nn::Dense<float>>(16 * c2 * c2 * c2, 64);
  net.add<nn::Tanh<float>>();
  net.add<nn::Dense<float>>(64, kNumActions);

  Rng rng(seed);
  net.init(rng);
  return agent;
}

std::array<float, kNumActions> q_forward(QAgent& agent,
                                         const nn::Tensor<float>& obs) {
  const auto y = agent.net.forward(obs);
  if (y.size() != kNumActions)
    throw ShapeError("q_forward: head does not emit one value per action");
  std::array<float, kNumActions> q{};
  std::copy(y.data.begin(), y.data.end(), q.begin());
  return q;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  double acc = 0.0, g = 1.0;
  for (double r : rewards) {
    acc += g * r;
    g *= gamma;
  }
  return acc;
}

double bellman_target(const Experience& e, QAgent& target, double gamma) {
  if (e.terminal) return e.reward;
  const auto q = q_forward(target, obs_tensor(e.after, target.pool));
  return e.reward + gamma * *std::max_element(q.begin(), q.end());
}

int select_action(const std::array<float, kNumActions>& q, double eps,
                  Rng& rng) {
  if (rng.uniform() < eps) return rng.uniform_int(0, kNumActions - 1);
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

double td_batch_loss(QAgent& agent, QAgent& target,
                     const std::vector<const Experience*>& batch,
                     double gamma) {
  if (batch.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* e : batch) {
    const double t = bellman_target(*e, target, gamma);
    const auto q = q_forward(agent, obs_tensor(e->before, agent.pool));
    const double d = q[e->action] - t;
    sum += d * d;
  }
  return sum / static_cast<double>(batch.size());
}

void td_update(QAgent& agent, QAgent& target,
               const std::vector<const Experience*>& batch, double gamma,
               nn::Sgd<float>& opt) {
  if (batch.empty()) return;
  const float inv = 1.0f / static_cast<float>(batch.size());
  agent.net.zero_grad();
  for (const auto* e : batch) {
    const double t = bellman_target(*e, target, gamma);
    const auto y = agent.net.forward(obs_tensor(e->before, agent.pool));
    nn::Tensor<float> gy(y.shape);
    gy.data[e->action] =
        2.0f * (y.data[e->action] - static_cast<float>(t)) * inv;
    agent.net.backward(gy);
  }
  opt.step(agent.net);
}

CubeState random_start(const std::array<int, 3>& dims, int edge, Rng& rng) {
  CubeState s;
  s.edge = edge;
  for (int a = 0; a < 3; ++a) s.corner[a] = rng.uniform_int(0, dims[a] - edge);
  return s;
}

namespace {

Observation shift_in(const Observation& obs, Frame f) {
  Observation out;
  out.frames.assign(obs.frames.begin() + 1, obs.frames.end());
  out.frames.push_back(std::move(f));
  return out;
}

}  // namespace

QAgent train_agent(const std::vector<RoiExample>& data, const AgentConfig& cfg,
                   const EnvConfig& env, std::uint64_t seed) {
  check_agent_config(cfg);
  if (data.empty()) throw ConfigError("dqn: empty training set");
  for (const auto& ex : data) {
    if (!ex.volume) throw ConfigError("dqn: null volume in training set");
    if (ex.target.edge != env.edge || !ex.target.fits(ex.volume->dims))
      throw ConfigError("dqn: target cube does not match the environment");
  }

  Rng master(seed);
  QAgent agent = build_agent(env, cfg, master.derive(0));
  QAgent target = agent;
  nn::Sgd<float> opt(cfg.sgd);
  ReplayBuffer replay(static_cast<std::size_t>(cfg.replay_capacity));
  Rng explore(master.derive(1));
  Rng starts(master.derive(2));

  int updates = 0;
  const int half = std::max(1, cfg.episodes / 2);
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const auto& ex = data[static_cast<std::size_t>(ep) % data.size()];
    const auto& dims = ex.volume->dims;
    const double eps =
        ep < half ? cfg.eps_start -
                        (cfg.eps_start - cfg.eps_end) * (static_cast<double>(ep) / half)
                  : cfg.eps_end;

    CubeState s = random_start(dims, env.edge, starts);
    Observation obs;
    obs.frames.assign(static_cast<std::size_t>(env.history_len),
                      pooled_frame(*ex.volume, s, agent.pool));
    for (int step = 0; step < env.max_steps; ++step) {
      const auto q = q_forward(agent, obs_tensor(obs, agent.pool));
      const int a = select_action(q, eps, explore);
      const Transition t =
          apply_action(s, static_cast<Action>(a), ex.target, dims, env);
      const Observation next =
          shift_in(obs, pooled_frame(*ex.volume, t.state_after, agent.pool));
      replay.push({obs, a, static_cast<float>(t.reward), next, t.terminal});
      s = t.state_after;
      obs = next;

      if ((step + 1) % cfg.train_every == 0 &&
          replay.size() >= static_cast<std::size_t>(cfg.batch)) {
        const auto batch =
            replay.sample(static_cast<std::size_t>(cfg.batch), explore);
        td_update(agent, target, batch, cfg.gamma, opt);
        if (++updates % cfg.target_sync == 0) target = agent;
      }
      if (t.terminal) break;
    }
  }
  return agent;
}

namespace {

using Scorer =
    std::function<std::array<float, kNumActions>(const std::vector<CubeState>&)>;

// Greedy rollout shared by the network and stub entry points. The scorer
// receives the visited states and evaluates the last one.
EpisodeResult roll(const Scorer& score, const std::array<int, 3>& dims,
                   const CubeState& start, const EnvConfig& cfg) {
  EpisodeResult res;
  res.trace.push_back(start);
  std::map<std::array<int, 3>, double> last_value;

  for (int step = 0; step < cfg.max_steps; ++step) {
    const auto q = score(res.trace);
    const CubeState& s = res.trace.back();
    // Greedy over the moves that stay inside the volume; an agent pinned to
    // a wall by its own argmax would otherwise never leave it.
    int a = -1;
    for (int c = 0; c < kNumActions; ++c) {
      if (step_state(s, static_cast<Action>(c), dims, cfg) == s) continue;
      if (a < 0 || q[c] > q[a]) a = c;
    }
    if (a < 0) break;
    last_value[s.corner] = q[a];
    res.trace.push_back(step_state(s, static_cast<Action>(a), dims, cfg));

    if (detect_oscillation(res.trace, cfg.osc_window, cfg.osc_count)) {
      // Rank the oscillating states by the value of the action that last
      // entered each one. Entering the true ROI is rewarded while leaving
      // it is penalized, so this prefers the cycle's best state; ranking by
      // the states' own values would do the opposite.
      std::map<std::array<int, 3>, int> visits;
      const std::size_t lo =
          res.trace.size() > static_cast<std::size_t>(cfg.osc_window)
              ? res.trace.size() - static_cast<std::size_t>(cfg.osc_window)
              : 0;
      for (std::size_t i = lo; i < res.trace.size(); ++i)
        ++visits[res.trace[i].corner];

      double best = -std::numeric_limits<double>::infinity();
      CubeState pick = res.trace.back();
      for (const auto& [corner, n] : visits) {
        if (n < cfg.osc_count) continue;
        std::size_t at = lo;
        for (std::size_t i = lo; i < res.trace.size(); ++i)
          if (res.trace[i].corner == corner) at = i;
        const auto& entered_from =
            at > 0 ? res.trace[at - 1].corner : corner;
        const double v = last_value.at(entered_from);
        if (v > best) {
          best = v;
          pick = {corner, start.edge};
        }
      }
      res.final = pick;
      return res;
    }
  }
  res.final = res.trace.back();
  return res;
}

}  // namespace

EpisodeResult run_episode(QAgent& agent, const Volume3D& vol,
                          const CubeState& start, const EnvConfig& cfg) {
  if (!start.fits(vol.dims))
    throw ShapeError("run_episode: start cube exits the volume");
  std::vector<Frame> frames;
  auto score = [&](const std::vector<CubeState>& trace) {
    while (frames.size() < trace.size())
      frames.push_back(pooled_frame(vol, trace[frames.size()], agent.pool));
    Observation obs;
    const auto h = static_cast<std::size_t>(agent.history_len);
    for (std::size_t i = trace.size() >= h ? trace.size() - h : 0;
         i < trace.size(); ++i)
      obs.frames.push_back(frames[i]);
    while (obs.frames.size() < h)
      obs.frames.insert(obs.frames.begin(), frames.front());
    return q_forward(agent, obs_tensor(obs, agent.pool));
  };
  return roll(score, vol.dims, start, cfg);
}

EpisodeResult run_episode(const QFn& q, const std::array<int, 3>& dims,
                          const CubeState& start, const EnvConfig& cfg) {
  auto score = [&](const std::vector<CubeState>& trace) {
    return q(trace.back());
  };
  return roll(score, dims, start, cfg);
}

CubeState median_corner(const std::vector<CubeState>& finals,
                        const std::array<int, 3>& dims) {
  if (finals.empty()) throw ConfigError("median_corner: no runs to aggregate");
  const int edge = finals.front().edge;
  CubeState out;
  out.edge = edge;
  for (int a = 0; a < 3; ++a) {
    std::vector<int> v;
    v.reserve(finals.size());
    for (const auto& f : finals) v.push_back(f.corner[a]);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double med =
        n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    const int hi = std::max(0, dims[a] - edge);
    out.corner[a] =
        std::clamp(static_cast<int>(std::llround(med)), 0, hi);
  }
  return out;
}

CubeState localize(QAgent& agent, const Volume3D& vol, const EnvConfig& cfg,
                   int n_starts, std::uint64_t seed) {
  if (n_starts < 1) throw ConfigError("localize: need at least one start");
  Rng rng(seed);
  std::vector<CubeState> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));
  for (int i = 0; i < n_starts; ++i)
    starts.push_back(random_start(vol.dims, cfg.edge, rng));

  std::vector<CubeState> finals(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    QAgent local = agent;
    finals[i] = run_episode(local, vol, starts[i], cfg).final;
  });
  return median_corner(finals, vol.dims);
}

}  // namespace colgrade
