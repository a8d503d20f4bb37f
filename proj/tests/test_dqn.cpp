#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <colgrade/dqn.hpp>
#include <colgrade/synthgen.hpp>
#include <set>

using namespace colgrade;

namespace {

Frame make_frame(int pool, float fill) {
  return std::make_shared<const std::vector<float>>(
      static_cast<std::size_t>(pool) * pool * pool, fill);
}

Observation const_obs(int history, int pool, float fill) {
  Observation o;
  o.frames.assign(static_cast<std::size_t>(history), make_frame(pool, fill));
  return o;
}

// Central finite differences against the analytic parameter gradients of
// mean(net(x)), run at double precision.
void check_gradients(nn::Network<double>& net, const nn::Tensor<double>& x) {
  auto mean_out = [&](const nn::Tensor<double>& in) {
    const auto y = net.forward(in);
    double s = 0.0;
    for (double v : y.data) s += v;
    return s / static_cast<double>(y.size());
  };

  const auto y = net.forward(x);
  net.zero_grad();
  nn::Tensor<double> gy(y.shape);
  for (auto& v : gy.data) v = 1.0 / static_cast<double>(y.size());
  net.backward(gy);

  std::vector<std::vector<double>*> params, grads;
  net.collect(params, grads);
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p]->size(); i += 7) {
      double& w = (*params[p])[i];
      const double keep = w;
      const double h = 1e-5 * std::max(1.0, std::abs(keep));
      w = keep + h;
      const double up = mean_out(x);
      w = keep - h;
      const double dn = mean_out(x);
      w = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double an = (*grads[p])[i];
      const double rel =
          std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
      REQUIRE(rel < 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("discounted return sums gamma-weighted rewards") {
  CHECK(discounted_return({1, 1, 1}, 1.0) == doctest::Approx(3.0));
  CHECK(discounted_return({1, -1}, 0.5) == doctest::Approx(0.5));
  CHECK(discounted_return({}, 0.9) == 0.0);
  CHECK(discounted_return({2, 2, 2}, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("box_pool averages blocks and checks shapes") {
  std::vector<float> v(4 * 4 * 4);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
  const auto out = box_pool(v, 4, 2);
  REQUIRE(out.size() == 8);

  // Brute-force average of the low 2x2x2 block.
  double sum = 0.0;
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) sum += v[(z * 4 + y) * 4 + x];
  CHECK(out[0] == doctest::Approx(sum / 8.0));

  const auto id = box_pool(v, 4, 4);
  CHECK(std::equal(id.begin(), id.end(), v.begin()));

  CHECK_THROWS_AS(box_pool(v, 4, 5), ShapeError);
  CHECK_THROWS_AS(box_pool(v, 5, 2), ShapeError);
}

TEST_CASE("pooled frames are normalized into the unit interval") {
  Volume3D vol({16, 16, 16}, {1, 1, 1});
  Rng rng(7);
  for (auto& v : vol.data) v = static_cast<float>(rng.uniform(5.0, 9.0));
  const CubeState s{{2, 3, 4}, 8};

  const auto f = pooled_frame(vol, s, 4);
  REQUIRE(f->size() == 64);
  float mn = 1e9f, mx = -1e9f;
  for (float v : *f) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  CHECK(mn == doctest::Approx(0.0f));
  CHECK(mx == doctest::Approx(1.0f));

  Volume3D flat({16, 16, 16}, {1, 1, 1}, 3.5f);
  const auto g = pooled_frame(flat, s, 4);
  for (float v : *g) CHECK(v == 0.0f);

  CHECK_THROWS_AS(pooled_frame(vol, CubeState{{12, 0, 0}, 8}, 4), ShapeError);
}

TEST_CASE("q_forward emits six finite deterministic values") {
  EnvConfig env;
  env.edge = 16;
  AgentConfig cfg;
  cfg.pool = 8;
  auto agent = build_agent(env, cfg, 3);

  const auto obs = obs_tensor(const_obs(env.history_len, agent.pool, 0.25f),
                              agent.pool);
  const auto q1 = q_forward(agent, obs);
  const auto q2 = q_forward(agent, obs);
  for (int a = 0; a < kNumActions; ++a) {
    CHECK(std::isfinite(q1[a]));
    CHECK(q1[a] == q2[a]);
  }

  const auto bad = obs_tensor(const_obs(env.history_len, 4, 0.25f), 4);
  CHECK_THROWS_AS(q_forward(agent, bad), ShapeError);
}

TEST_CASE("q-network gradients match finite differences at double precision") {
  nn::Network<double> net;
  net.add<nn::Conv3d<double>>(4, 8, 3, 2, 1);
  net.add<nn::Tanh<double>>();
  net.add<nn::Conv3d<double>>(8, 16, 3, 2, 1);
  net.add<nn::Tanh<double>>();
  net.add<nn::Flatten<double>>();
  net.add<nn::Dense<double>>(16, 64);
  net.add<nn::Tanh<double>>();
  net.add<nn::Dense<double>>(64, kNumActions);
  Rng rng(11);
  net.init(rng);

  nn::Tensor<double> x({4, 4, 4, 4});
  for (auto& v : x.data) v = rng.uniform(0.0, 1.0);
  check_gradients(net, x);
}

TEST_CASE("bellman target is the reward at terminals, bootstrapped otherwise") {
  EnvConfig env;
  env.edge = 16;
  AgentConfig cfg;
  cfg.pool = 8;
  auto target = build_agent(env, cfg, 5);

  Experience e;
  e.before = const_obs(env.history_len, target.pool, 0.5f);
  e.after = const_obs(env.history_len, target.pool, 0.5f);
  e.reward = 1.0f;
  e.terminal = true;
  CHECK(bellman_target(e, target, 0.9) == doctest::Approx(1.0));

  // Rig the head so max_a Q = 2 everywhere: zero weights, one bias at 2.
  std::vector<std::vector<float>*> params, grads;
  target.net.collect(params, grads);
  auto& head_w = *params[params.size() - 2];
  auto& head_b = *params[params.size() - 1];
  std::fill(head_w.begin(), head_w.end(), 0.0f);
  std::fill(head_b.begin(), head_b.end(), 0.0f);
  head_b[0] = 2.0f;

  e.terminal = false;
  e.reward = -1.0f;
  CHECK(bellman_target(e, target, 0.9) == doctest::Approx(-1.0 + 0.9 * 2.0));
  CHECK(bellman_target(e, target, 0.0) == doctest::Approx(-1.0));
}

TEST_CASE("epsilon 1 explores uniformly over the six actions") {
  const std::array<float, kNumActions> q{5, 4, 3, 2, 1, 0};
  Rng rng(123);
  std::array<int, kNumActions> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[select_action(q, 1.0, rng)];

  const double p = 1.0 / kNumActions;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int a = 0; a < kNumActions; ++a)
    CHECK(std::abs(counts[a] - n * p) <= 3.0 * sigma);

  // eps 0 is pure exploitation, ties to the lowest index.
  CHECK(select_action(q, 0.0, rng) == 0);
  CHECK(select_action({1, 1, 7, 7, 0, 0}, 0.0, rng) == 2);
}

TEST_CASE("replay buffer evicts oldest first and samples without replacement") {
  ReplayBuffer buf(4);
  for (int i = 0; i < 6; ++i) {
    Experience e;
    e.action = i;
    buf.push(e);
  }
  REQUIRE(buf.size() == 4);
  CHECK(buf.at(0).action == 2);
  CHECK(buf.at(3).action == 5);

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto batch = buf.sample(3, rng);
    REQUIRE(batch.size() == 3);
    std::set<const Experience*> uniq(batch.begin(), batch.end());
    CHECK(uniq.size() == 3);
  }
  CHECK(buf.sample(10, rng).size() == 4);
  CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);
}

TEST_CASE("one TD step on a fixed batch reduces its loss") {
  EnvConfig env;
  env.edge = 16;
  AgentConfig cfg;
  cfg.pool = 8;
  auto agent = build_agent(env, cfg, 21);
  auto target = agent;

  Rng rng(22);
  ReplayBuffer buf(64);
  for (int i = 0; i < 32; ++i) {
    Experience e;
    Observation a, b;
    for (int f = 0; f < env.history_len; ++f) {
      a.frames.push_back(make_frame(agent.pool, static_cast<float>(rng.uniform())));
      b.frames.push_back(make_frame(agent.pool, static_cast<float>(rng.uniform())));
    }
    e.before = a;
    e.after = b;
    e.action = rng.uniform_int(0, kNumActions - 1);
    e.reward = rng.uniform() < 0.5 ? -1.0f : 1.0f;
    e.terminal = i % 4 == 0;
    buf.push(e);
  }
  const auto batch = buf.sample(32, rng);

  nn::SgdConfig sgd;
  sgd.lr = 0.001;
  sgd.momentum = 0.0;
  nn::Sgd<float> opt(sgd);
  const double before = td_batch_loss(agent, target, batch, 0.9);
  td_update(agent, target, batch, 0.9, opt);
  const double after = td_batch_loss(agent, target, batch, 0.9);
  CHECK(after < before);
}

TEST_CASE("td updates with gamma 0 regress toward sampled reward means") {
  // Frozen buffer: one observation, one action, rewards drawn from {-1, +1}
  // with 3:1 odds. The fitted Q for that action should approach the mean.
  EnvConfig env;
  env.edge = 16;
  env.history_len = 2;
  AgentConfig cfg;
  cfg.pool = 4;
  auto agent = build_agent(env, cfg, 31);
  auto target = agent;

  Rng rng(32);
  ReplayBuffer buf(64);
  double mean = 0.0;
  for (int i = 0; i < 64; ++i) {
    Experience e;
    e.before = const_obs(env.history_len, agent.pool, 0.5f);
    e.after = const_obs(env.history_len, agent.pool, 0.5f);
    e.action = 2;
    e.reward = i % 4 == 0 ? -1.0f : 1.0f;
    e.terminal = false;
    mean += e.reward;
    buf.push(e);
  }
  mean /= 64.0;

  nn::SgdConfig sgd;
  sgd.lr = 0.05;
  sgd.momentum = 0.0;
  sgd.decay = 0.0;
  nn::Sgd<float> opt(sgd);
  for (int it = 0; it < 1500; ++it) {
    const auto batch = buf.sample(32, rng);
    td_update(agent, target, batch, 0.0, opt);
  }
  const auto q =
      q_forward(agent, obs_tensor(const_obs(env.history_len, agent.pool, 0.5f),
                                  agent.pool));
  CHECK(q[2] == doctest::Approx(mean).epsilon(0.05));
}

TEST_CASE("run_episode respects caps and resolves forced oscillations") {
  EnvConfig cfg;
  cfg.edge = 8;
  cfg.max_steps = 0;
  const std::array<int, 3> dims{32, 32, 32};
  const CubeState start{{4, 4, 4}, 8};

  QFn stub = [](const CubeState&) {
    return std::array<float, kNumActions>{1, 0, 0, 0, 0, 0};
  };
  auto r0 = run_episode(stub, dims, start, cfg);
  CHECK(r0.final == start);
  CHECK(r0.trace.size() == 1);

  cfg.max_steps = 50;
  // Score the x-corner so the policy ping-pongs between two states: moving
  // right at even x, left at odd x.
  QFn pingpong = [](const CubeState& s) {
    std::array<float, kNumActions> q{};
    if (s.corner[0] % 2 == 0)
      q[static_cast<int>(Action::right)] = 1.0f;
    else
      q[static_cast<int>(Action::left)] = 1.0f;
    return q;
  };
  auto r1 = run_episode(pingpong, dims, start, cfg);
  CHECK(r1.trace.size() <= static_cast<std::size_t>(cfg.max_steps) + 1);
  const CubeState a{{4, 4, 4}, 8}, b{{5, 4, 4}, 8};
  const bool ends_on_pair = r1.final == a || r1.final == b;
  CHECK(ends_on_pair);
  CHECK(r1.trace.size() < 30);  // oscillation cut it short

  // Blocked moves are skipped: at x=0 the preferred "left" is illegal, so the
  // policy takes "right" instead and ping-pongs. The tie-break keeps the state
  // entered by the higher-valued action, here the left move back to x=0.
  QFn wall = [](const CubeState&) {
    std::array<float, kNumActions> q;
    q.fill(-1.0f);
    q[static_cast<int>(Action::left)] = 1.0f;
    q[static_cast<int>(Action::right)] = 0.5f;
    return q;
  };
  auto r2 = run_episode(wall, dims, CubeState{{0, 4, 4}, 8}, cfg);
  CHECK(r2.final == CubeState{{0, 4, 4}, 8});
  CHECK(r2.trace.size() < 30);

  // A cube filling the whole volume has no legal move at all.
  auto r3 = run_episode(stub, std::array<int, 3>{8, 8, 8}, CubeState{{0, 0, 0}, 8}, cfg);
  CHECK(r3.final == CubeState{{0, 0, 0}, 8});
  CHECK(r3.trace.size() == 1);
}

TEST_CASE("median_corner aggregates coordinate-wise") {
  const std::array<int, 3> dims{64, 64, 64};
  std::vector<CubeState> finals;
  for (int x : {10, 10, 10, 50}) finals.push_back({{x, 20, 30}, 8});
  const auto m = median_corner(finals, dims);
  CHECK(m.corner == std::array<int, 3>{10, 20, 30});
  CHECK(m.edge == 8);

  // Unanimous runs return the shared corner.
  std::vector<CubeState> same(5, CubeState{{7, 8, 9}, 8});
  CHECK(median_corner(same, dims).corner == std::array<int, 3>{7, 8, 9});

  // Even count averages the middle pair and rounds.
  std::vector<CubeState> pair{CubeState{{10, 0, 0}, 8},
                              CubeState{{13, 0, 0}, 8}};
  CHECK(median_corner(pair, dims).corner[0] == 12);

  // Clamped into the volume.
  std::vector<CubeState> high(3, CubeState{{60, 0, 0}, 8});
  CHECK(median_corner(high, dims).corner[0] == 56);

  CHECK_THROWS_AS(median_corner({}, dims), ConfigError);
}

TEST_CASE("configuration errors are rejected") {
  EnvConfig env;
  AgentConfig cfg;
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(build_agent(env, cfg, 1), ConfigError);
  cfg.gamma = 0.9;
  cfg.batch = 0;
  CHECK_THROWS_AS(build_agent(env, cfg, 1), ConfigError);
  cfg.batch = 32;
  CHECK_THROWS_AS(train_agent({}, cfg, env, 1), ConfigError);

  Volume3D vol({32, 32, 32}, {1, 1, 1}, 1.0f);
  env.edge = 8;
  std::vector<RoiExample> bad{{&vol, CubeState{{0, 0, 0}, 16}}};
  CHECK_THROWS_AS(train_agent(bad, cfg, env, 1), ConfigError);
}

TEST_CASE("training on a tiny phantom localizes it from the far corner") {
  PhantomSpec spec;
  spec.seed = 77;
  spec.dims = {32, 32, 32};
  spec.grade = 0;
  spec.lesion_center = {16, 16, 16};
  spec.lesion_radii = {5, 5, 5};
  spec.roi_edge = 8;
  const Phantom ph = gen_phantom(spec);

  EnvConfig env;
  env.edge = 8;
  env.max_steps = 120;
  env.tau = 0.85;

  // At this scale most of the corner grid has zero overlap with the target,
  // so a short horizon keeps the flat region from dominating the values.
  AgentConfig cfg;
  cfg.episodes = 200;
  cfg.gamma = 0.5;
  cfg.replay_capacity = 20000;
  cfg.sgd.lr = 0.01;
  cfg.sgd.momentum = 0.0;

  std::vector<RoiExample> data{{&ph.tmax, ph.roi}};
  auto agent = train_agent(data, cfg, env, 2024);

  const CubeState far{{24, 24, 24}, 8};
  auto res = run_episode(agent, ph.tmax, far, env);
  CHECK(iou(res.final, ph.roi) >= 0.85);

  const auto roi1 = localize(agent, ph.tmax, env, 20, 555);
  const auto roi2 = localize(agent, ph.tmax, env, 20, 555);
  CHECK(roi1 == roi2);
  CHECK(roi1.fits(ph.tmax.dims));
  CHECK(iou(roi1, ph.roi) > 0.5);
  CHECK_THROWS_AS(localize(agent, ph.tmax, env, 0, 1), ConfigError);

  // Deterministic retrain: same seed, same parameters.
  auto again = train_agent(data, cfg, env, 2024);
  std::vector<std::vector<float>*> p1, g1, p2, g2;
  agent.net.collect(p1, g1);
  again.net.collect(p2, g2);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(*p1[i] == *p2[i]);
}
