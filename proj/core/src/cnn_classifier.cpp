#include <algorithm>
#include <cmath>
#include <vector>

#include "colgrade/classifiers.hpp"
#include "colgrade/rng.hpp"

namespace colgrade {

namespace {

// Labels are grades (or cascaded stage labels), always within {0,1,2}.
void check_labels(const std::vector<LabeledSample>& data, const char* who) {
  if (data.empty()) throw DataError(std::string(who) + ": empty training set");
  for (const auto& s : data)
    if (s.label < 0 || s.label > 2)
      throw DataError(std::string(who) + ": label out of range");
}

std::vector<float> class_counts(const std::vector<LabeledSample>& data,
                                int classes) {
  std::vector<float> n(classes, 0.0f);
  for (const auto& s : data) n[s.label] += 1.0f;
  return n;
}

}  // namespace

CnnClassifier::CnnClassifier(nn::Network<float> net) : net_(std::move(net)) {
  const auto& layers = net_.layers();
  if (layers.size() < 2) throw FormatError("cnn: checkpoint has no layers");
  cube_mode_ = layers.front()->kind() == nn::kConv3d;
  const auto head = layers.back()->kind();
  if (head != nn::kSigmoid && head != nn::kSoftmax)
    throw FormatError("cnn: checkpoint lacks a probability head");
  outputs_ = static_cast<int>(layers[layers.size() - 2]->meta().at(1));
  fitted_ = true;
}

nn::Tensor<float> CnnClassifier::input_tensor(const LabeledSample& s) const {
  if (cube_mode_) {
    if (!s.is_cube()) throw ShapeError("cnn: trained on cubes, got a vector");
    return nn::from_cube<float>(s.cube);
  }
  if (s.is_cube()) throw ShapeError("cnn: trained on vectors, got a cube");
  nn::Tensor<float> t = nn::Tensor<float>::vec(static_cast<int>(s.features.size()));
  std::copy(s.features.begin(), s.features.end(), t.data.begin());
  return t;
}

void CnnClassifier::fit(const std::vector<LabeledSample>& data) {
  check_labels(data, "cnn");
  cube_mode_ = data.front().is_cube();
  for (const auto& s : data) {
    if (s.is_cube() != cube_mode_)
      throw ShapeError("cnn: mixed cube and vector samples");
    if (cube_mode_) {
      if (s.cube.edge != data.front().cube.edge ||
          s.cube.channels.size() != data.front().cube.channels.size())
        throw ShapeError("cnn: cube shapes differ");
    } else if (s.features.size() != data.front().features.size()) {
      throw ShapeError("cnn: feature dimensions differ");
    }
  }

  int max_label = 0;
  for (const auto& s : data) max_label = std::max(max_label, s.label);
  const int classes = max_label + 1;
  outputs_ = classes == 2 ? 1 : classes;

  Rng rng(seed_);
  if (cube_mode_)
    net_ = build_grading_net<float>(
        static_cast<int>(data.front().cube.channels.size()),
        data.front().cube.edge, outputs_);
  else
    net_ = build_grading_mlp<float>(
        static_cast<int>(data.front().features.size()), outputs_);
  net_.init(rng);

  // Class weight 1/n_k, absent classes never contribute.
  const auto counts = class_counts(data, classes);
  std::vector<float> weights(classes, 0.0f);
  for (int k = 0; k < classes; ++k)
    if (counts[k] > 0) weights[k] = 1.0f / counts[k];

  nn::Sgd<float> opt(cfg_.sgd);
  if (cfg_.epochs < 0 || cfg_.batch < 1)
    throw ConfigError("cnn: epochs must be >= 0 and batch >= 1");

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t pos = 0; pos < order.size();) {
      const std::size_t stop =
          std::min(order.size(), pos + static_cast<std::size_t>(cfg_.batch));
      const float inv = 1.0f / static_cast<float>(stop - pos);
      net_.zero_grad();
      for (; pos < stop; ++pos) {
        const auto& s = data[order[pos]];
        const auto out = net_.forward(input_tensor(s));
        nn::Tensor<float> grad;
        if (outputs_ == 1) {
          grad = nn::weighted_bce<float>(out, s.label,
                                         {weights[0], weights[1]})
                     .second;
        } else {
          grad = nn::weighted_cce<float>(out, s.label, weights).second;
        }
        for (auto& g : grad.data) g *= inv;
        net_.backward(grad);
      }
      opt.step(net_);
    }
  }
  fitted_ = true;
}

std::vector<float> CnnClassifier::predict_proba(const LabeledSample& s) const {
  if (!fitted_) throw ConfigError("cnn: predict before fit");
  auto net = net_;  // forward caches activations, keep predict const and pure
  const auto out = net.forward(input_tensor(s));
  if (outputs_ == 1) {
    const float p = out.data[0];
    return {1.0f - p, p};
  }
  return {out.data.begin(), out.data.end()};
}

int CnnClassifier::predict(const LabeledSample& s) const {
  const auto probs = predict_proba(s);
  return static_cast<int>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
}

void CnnClassifier::save(const std::string& path) const {
  if (!fitted_) throw ConfigError("cnn: save before fit");
  nn::save_network(net_, path);
}

}  // namespace colgrade
