#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "colgrade/nn.hpp"
#include "colgrade/volume.hpp"

namespace colgrade {

// Convolutional denoising auto-encoder. Three stride-2 5x5x5 convolutions
// take a 3-channel cube down to a single-channel code at edge/8 per axis
// (64 -> 8, so 512 features), then a mirrored transposed-convolution stack
// reconstructs the input.
struct DaeConfig {
  double sigma = 0.1;  // corruption noise stddev
  int epochs = 50;
  int batch = 8;
  int edge = 64;  // input cube edge; must be a multiple of 2^depth
  // Encoder channel progression; entry 0 is the input channel count and
  // each later entry is one stride-2 convolution. The decoder mirrors it.
  // The default reaches the single-channel code cube; shallow, wide
  // progressions (e.g. {3, 24}) keep enough capacity to represent the
  // identity, which some desk-scale experiments need.
  std::vector<int> channels{3, 4, 2, 1};
  // Output head: "sigmoid" matches [0,1] targets; "linear" and "tanh" are
  // available because a zero-initialized linear head reconstructs an
  // all-zero cube exactly, which sigmoid cannot.
  std::string final_activation = "sigmoid";
  nn::SgdConfig sgd{};
};

struct DaeModel {
  nn::Network<float> net;
  int encoder_layers = 6;  // conv+tanh pairs making up the encoder
  int edge = 64;
  int in_channels = 3;
  std::size_t code_len = 512;      // channels * (edge / 2^depth)^3
  std::vector<double> epoch_loss;  // mean training MSE per epoch
};

// Adds seeded i.i.d. Gaussian noise and clamps to [0,1]. sigma = 0 returns
// the input bit for bit.
Cube corrupt(const Cube& cube, std::uint64_t seed, double sigma);

// Initialized but untrained model (seeded Glorot weights).
DaeModel dae_build(const DaeConfig& cfg, std::uint64_t seed);

// Minimizes MSE(clean, reconstruct(corrupt(clean))) with SGD. Epoch losses
// are recorded in the returned model.
DaeModel dae_train(const std::vector<Cube>& cubes, const DaeConfig& cfg,
                   std::uint64_t seed);

// Flattened encoder output; length = (edge/8)^3.
std::vector<float> dae_encode(DaeModel& model, const Cube& cube);

// MSE between the cube and its full-network reconstruction (no corruption).
double dae_reconstruction_mse(DaeModel& model, const Cube& cube);

}  // namespace colgrade
