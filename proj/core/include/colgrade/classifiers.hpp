#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "colgrade/errors.hpp"
#include "colgrade/nn.hpp"
#include "colgrade/volume.hpp"

namespace colgrade {

// One grading example: either a flat feature vector or a multi-channel cube.
// Exactly one of the two must be populated.
struct LabeledSample {
  std::vector<float> features;
  Cube cube;
  int label = 0;
  std::string id;

  bool is_cube() const { return !cube.channels.empty(); }
};

struct CnnConfig {
  int epochs = 20;
  int batch = 8;
  nn::SgdConfig sgd;  // lr 0.001, decay 1e-6, momentum 0.9
};

struct KnnConfig {
  int k = 3;
};

struct ForestConfig {
  int trees = 200;
  int min_leaf = 1;
};

struct SvmConfig {
  double c = 10.0;
  int degree = 3;
  double tol = 1e-3;
  int max_passes = 1000;
};

struct ClassifierSpec {
  std::string kind = "rf";  // cnn | knn | rf | svm
  std::uint64_t seed = 0;
  CnnConfig cnn;
  KnnConfig knn;
  ForestConfig rf;
  SvmConfig svm;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const std::vector<LabeledSample>& data) = 0;
  virtual int predict(const LabeledSample& s) const = 0;
  // Probability (or vote-fraction) per class index 0..max trained label.
  virtual std::vector<float> predict_proba(const LabeledSample& s) const = 0;
  virtual void save(const std::string& path) const = 0;
};

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec);
std::unique_ptr<Classifier> load_classifier(const std::string& path);

// Gini impurity 1 - sum((c/n)^2) of a class-count histogram; empty -> 0.
double gini_impurity(const std::vector<int>& counts);

// Per-class penalty C_k = c * n / (n_classes * n_k) over the labels present;
// indexed by label, absent labels get 0.
std::vector<double> balanced_class_weights(const std::vector<int>& labels,
                                           double c);

// Grading network: four 5^3 stride-2 tanh convolutions (2, 2, 4, 4 maps),
// flatten, dense 64 and 32 with tanh, then a head that is a single sigmoid
// unit when outputs == 1 and a softmax otherwise. Templated so gradient
// checks can run the same architecture at double precision.
template <class T>
nn::Network<T> build_grading_net(int in_channels, int edge, int outputs) {
  if (in_channels < 1 || edge < 1 || outputs < 1)
    throw ShapeError("grading net: bad dimensions");
  nn::Network<T> net;
  const int maps[4] = {2, 2, 4, 4};
  int ch = in_channels, e = edge;
  for (int m : maps) {
    net.template add<nn::Conv3d<T>>(ch, m, 5, 2, 2);
    net.template add<nn::Tanh<T>>();
    ch = m;
    e = nn::detail::conv_out_dim(e, 5, 2, 2);
  }
  net.template add<nn::Flatten<T>>();
  net.template add<nn::Dense<T>>(ch * e * e * e, 64);
  net.template add<nn::Tanh<T>>();
  net.template add<nn::Dense<T>>(64, 32);
  net.template add<nn::Tanh<T>>();
  net.template add<nn::Dense<T>>(32, outputs);
  if (outputs == 1)
    net.template add<nn::Sigmoid<T>>();
  else
    net.template add<nn::Softmax<T>>();
  return net;
}

// Feature-vector variant: the convolutional stack is dropped and the vector
// feeds the same dense head.
template <class T>
nn::Network<T> build_grading_mlp(int dim, int outputs) {
  if (dim < 1 || outputs < 1) throw ShapeError("grading mlp: bad dimensions");
  nn::Network<T> net;
  net.template add<nn::Dense<T>>(dim, 64);
  net.template add<nn::Tanh<T>>();
  net.template add<nn::Dense<T>>(64, 32);
  net.template add<nn::Tanh<T>>();
  net.template add<nn::Dense<T>>(32, outputs);
  if (outputs == 1)
    net.template add<nn::Sigmoid<T>>();
  else
    net.template add<nn::Softmax<T>>();
  return net;
}

class CnnClassifier : public Classifier {
 public:
  CnnClassifier(CnnConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}
  explicit CnnClassifier(nn::Network<float> net);  // from a checkpoint

  void fit(const std::vector<LabeledSample>& data) override;
  int predict(const LabeledSample& s) const override;
  std::vector<float> predict_proba(const LabeledSample& s) const override;
  void save(const std::string& path) const override;

  nn::Network<float>& net() { return net_; }

 private:
  nn::Tensor<float> input_tensor(const LabeledSample& s) const;

  CnnConfig cfg_;
  std::uint64_t seed_ = 0;
  nn::Network<float> net_;
  bool fitted_ = false;
  bool cube_mode_ = true;
  int outputs_ = 0;  // 1 means a binary sigmoid unit
};

class KnnClassifier : public Classifier {
 public:
  KnnClassifier(KnnConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

  void fit(const std::vector<LabeledSample>& data) override;
  int predict(const LabeledSample& s) const override;
  std::vector<float> predict_proba(const LabeledSample& s) const override;
  void save(const std::string& path) const override;

 private:
  friend std::unique_ptr<Classifier> load_classifier(const std::string&);

  KnnConfig cfg_;
  std::uint64_t seed_ = 0;
  int dim_ = 0;
  std::vector<std::vector<float>> points_;
  std::vector<int> labels_;
};

class ForestClassifier : public Classifier {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    float threshold = 0.0f;
    std::uint32_t left = 0;  // goes when value <= threshold
    std::uint32_t right = 0;
    int label = 0;
  };

  ForestClassifier(ForestConfig cfg, std::uint64_t seed)
      : cfg_(cfg), seed_(seed) {}

  void fit(const std::vector<LabeledSample>& data) override;
  int predict(const LabeledSample& s) const override;
  std::vector<float> predict_proba(const LabeledSample& s) const override;
  void save(const std::string& path) const override;

  // Accuracy of out-of-bag majority votes over the training set, computed
  // during fit on samples left out of at least one bootstrap.
  double oob_accuracy() const;

 private:
  friend std::unique_ptr<Classifier> load_classifier(const std::string&);

  ForestConfig cfg_;
  std::uint64_t seed_ = 0;
  int dim_ = 0;
  int classes_ = 0;
  std::vector<std::vector<Node>> trees_;
  double oob_accuracy_ = -1.0;
};

class SvmClassifier : public Classifier {
 public:
  struct PairModel {
    int lo = 0, hi = 0;  // class pair; decision >= 0 votes lo
    double bias = 0.0;
    std::vector<double> coef;  // alpha_i * y_i per support vector
    std::vector<std::vector<float>> support;
  };

  SvmClassifier(SvmConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

  void fit(const std::vector<LabeledSample>& data) override;
  int predict(const LabeledSample& s) const override;
  std::vector<float> predict_proba(const LabeledSample& s) const override;
  void save(const std::string& path) const override;

  const std::vector<PairModel>& pairs() const { return pairs_; }
  // Dual objective logged after every multiplier update, one trace per pair.
  const std::vector<std::vector<double>>& objective_traces() const {
    return traces_;
  }

 private:
  friend std::unique_ptr<Classifier> load_classifier(const std::string&);

  SvmConfig cfg_;
  std::uint64_t seed_ = 0;
  int dim_ = 0;
  int classes_ = 0;
  std::vector<PairModel> pairs_;
  std::vector<std::vector<double>> traces_;
};

}  // namespace colgrade
