#include "colgrade/dae.hpp"

#include <algorithm>
#include <numeric>

#include "colgrade/errors.hpp"
#include "colgrade/rng.hpp"

namespace colgrade {

Cube corrupt(const Cube& cube, std::uint64_t seed, double sigma) {
  if (sigma == 0.0) return cube;
  Cube out = cube;
  Rng rng(seed);
  for (auto& ch : out.channels)
    for (auto& v : ch)
      v = std::clamp(static_cast<float>(v + sigma * rng.normal()), 0.0f, 1.0f);
  return out;
}

DaeModel dae_build(const DaeConfig& cfg, std::uint64_t seed) {
  const int depth = static_cast<int>(cfg.channels.size()) - 1;
  if (depth < 1) throw ConfigError("dae: channel progression needs >= 2 entries");
  for (int c : cfg.channels)
    if (c < 1) throw ConfigError("dae: channel counts must be >= 1");
  const int factor = 1 << depth;
  if (cfg.edge < factor || cfg.edge % factor != 0)
    throw ConfigError("dae: edge must be a positive multiple of 2^depth");
  if (cfg.final_activation != "sigmoid" && cfg.final_activation != "linear" &&
      cfg.final_activation != "tanh")
    throw ConfigError("dae: unknown final activation: " + cfg.final_activation);

  DaeModel m;
  m.edge = cfg.edge;
  m.in_channels = cfg.channels.front();
  const int code_edge = cfg.edge / factor;
  m.code_len = static_cast<std::size_t>(cfg.channels.back()) * code_edge *
               code_edge * code_edge;
  auto& net = m.net;
  for (int i = 0; i < depth; ++i) {
    net.add<nn::Conv3d<float>>(cfg.channels[i], cfg.channels[i + 1], 5, 2, 2);
    net.add<nn::Tanh<float>>();
  }
  m.encoder_layers = 2 * depth;
  for (int i = depth; i > 1; --i) {
    net.add<nn::TConv3d<float>>(cfg.channels[i], cfg.channels[i - 1], 5, 2, 2);
    net.add<nn::Tanh<float>>();
  }
  net.add<nn::TConv3d<float>>(cfg.channels[1], cfg.channels[0], 5, 2, 2);
  if (cfg.final_activation == "sigmoid") net.add<nn::Sigmoid<float>>();
  if (cfg.final_activation == "tanh") net.add<nn::Tanh<float>>();

  Rng rng(seed);
  net.init(rng);
  return m;
}

namespace {

void check_cube(const Cube& cube, int edge, int channels, const char* what) {
  if (cube.edge != edge)
    throw ShapeError(std::string(what) + ": cube edge does not match model");
  if (static_cast<int>(cube.channels.size()) != channels)
    throw ShapeError(std::string(what) + ": cube channel count does not match");
}

}  // namespace

DaeModel dae_train(const std::vector<Cube>& cubes, const DaeConfig& cfg,
                   std::uint64_t seed) {
  if (cubes.empty()) throw ConfigError("dae: empty training set");

  Rng master(seed);
  DaeModel m = dae_build(cfg, master.derive(0));
  for (const auto& c : cubes)
    check_cube(c, cfg.edge, m.in_channels, "dae_train");
  nn::Sgd<float> opt(cfg.sgd);

  std::vector<nn::Tensor<float>> clean;
  clean.reserve(cubes.size());
  for (const auto& c : cubes) clean.push_back(nn::from_cube<float>(c));

  std::vector<std::size_t> order(cubes.size());
  std::iota(order.begin(), order.end(), 0);

  Rng shuffle_rng(master.derive(1));
  Rng noise_rng(master.derive(2));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      const float inv_batch = 1.0f / static_cast<float>(stop - start);
      m.net.zero_grad();
      for (std::size_t i = start; i < stop; ++i) {
        const auto& target = clean[order[i]];
        const Cube noisy =
            corrupt(cubes[order[i]], noise_rng.next_u64(), cfg.sigma);
        const auto pred = m.net.forward(nn::from_cube<float>(noisy));
        auto [loss, gy] = nn::mse_loss(pred, target);
        epoch_sum += loss;
        for (auto& g : gy.data) g *= inv_batch;
        m.net.backward(gy);
      }
      opt.step(m.net);
    }
    m.epoch_loss.push_back(epoch_sum / static_cast<double>(order.size()));
  }
  return m;
}

std::vector<float> dae_encode(DaeModel& model, const Cube& cube) {
  check_cube(cube, model.edge, model.in_channels, "dae_encode");
  nn::Tensor<float> h = nn::from_cube<float>(cube);
  auto& layers = model.net.layers();
  for (int i = 0; i < model.encoder_layers; ++i) h = layers[i]->forward(h);
  if (h.size() != model.code_len)
    throw ShapeError("dae_encode: unexpected code size");
  return std::vector<float>(h.data.begin(), h.data.end());
}

double dae_reconstruction_mse(DaeModel& model, const Cube& cube) {
  check_cube(cube, model.edge, model.in_channels, "dae_reconstruction_mse");
  const auto x = nn::from_cube<float>(cube);
  const auto pred = model.net.forward(x);
  return nn::mse_loss(pred, x).first;
}

}  // namespace colgrade
