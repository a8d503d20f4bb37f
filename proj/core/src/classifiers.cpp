#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "bytes.hpp"
#include "colgrade/classifiers.hpp"

namespace colgrade {

double gini_impurity(const std::vector<int>& counts) {
  long n = 0;
  for (int c : counts) {
    if (c < 0) throw DataError("gini: negative count");
    n += c;
  }
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / n;
    sum += p * p;
  }
  return 1.0 - sum;
}

std::vector<double> balanced_class_weights(const std::vector<int>& labels,
                                           double c) {
  if (labels.empty()) throw DataError("class weights: empty label set");
  std::map<int, long> counts;
  for (int l : labels) {
    if (l < 0) throw DataError("class weights: negative label");
    ++counts[l];
  }
  std::vector<double> w(counts.rbegin()->first + 1, 0.0);
  const double n = static_cast<double>(labels.size());
  const double k = static_cast<double>(counts.size());
  for (const auto& [label, nk] : counts) w[label] = c * n / (k * nk);
  return w;
}

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec) {
  if (spec.kind == "cnn")
    return std::make_unique<CnnClassifier>(spec.cnn, spec.seed);
  if (spec.kind == "knn")
    return std::make_unique<KnnClassifier>(spec.knn, spec.seed);
  if (spec.kind == "rf")
    return std::make_unique<ForestClassifier>(spec.rf, spec.seed);
  if (spec.kind == "svm")
    return std::make_unique<SvmClassifier>(spec.svm, spec.seed);
  throw ConfigError("classifier: unknown kind: " + spec.kind);
}

// CLF1 model container:
//   magic "CLF1" | u16 version (=1) | u16 kind (1 knn, 2 rf, 3 svm) |
//   u64 seed | kind-specific hyperparameters and payload, little-endian.
// Networks (the CNN) are stored as QNET1 checkpoints instead; the loader
// dispatches on the magic.
namespace {

constexpr std::uint16_t kKindKnn = 1, kKindRf = 2, kKindSvm = 3;

void put_i32(std::string& out, int v) {
  bytes::put_u32(out, static_cast<std::uint32_t>(v));
}

int get_i32(bytes::Reader& r) { return static_cast<int>(r.u32()); }

std::string clf1_header(std::uint16_t kind, std::uint64_t seed) {
  std::string buf = "CLF1";
  bytes::put_u16(buf, 1);
  bytes::put_u16(buf, kind);
  bytes::put_u64(buf, seed);
  return buf;
}

}  // namespace

void KnnClassifier::save(const std::string& path) const {
  if (points_.empty()) throw ConfigError("knn: save before fit");
  std::string buf = clf1_header(kKindKnn, seed_);
  put_i32(buf, cfg_.k);
  put_i32(buf, static_cast<int>(points_.size()));
  put_i32(buf, dim_);
  for (int l : labels_) put_i32(buf, l);
  for (const auto& p : points_)
    for (float v : p) bytes::put_f32(buf, v);
  bytes::write_file(path, buf, "CLF1");
}

void ForestClassifier::save(const std::string& path) const {
  if (trees_.empty()) throw ConfigError("rf: save before fit");
  std::string buf = clf1_header(kKindRf, seed_);
  put_i32(buf, cfg_.trees);
  put_i32(buf, cfg_.min_leaf);
  put_i32(buf, dim_);
  put_i32(buf, classes_);
  put_i32(buf, static_cast<int>(trees_.size()));
  for (const auto& tree : trees_) {
    put_i32(buf, static_cast<int>(tree.size()));
    for (const auto& node : tree) {
      put_i32(buf, node.feature);
      bytes::put_f32(buf, node.threshold);
      bytes::put_u32(buf, node.left);
      bytes::put_u32(buf, node.right);
      put_i32(buf, node.label);
    }
  }
  bytes::write_file(path, buf, "CLF1");
}

void SvmClassifier::save(const std::string& path) const {
  if (pairs_.empty()) throw ConfigError("svm: save before fit");
  std::string buf = clf1_header(kKindSvm, seed_);
  bytes::put_f64(buf, cfg_.c);
  put_i32(buf, cfg_.degree);
  bytes::put_f64(buf, cfg_.tol);
  put_i32(buf, cfg_.max_passes);
  put_i32(buf, dim_);
  put_i32(buf, classes_);
  put_i32(buf, static_cast<int>(pairs_.size()));
  for (const auto& p : pairs_) {
    put_i32(buf, p.lo);
    put_i32(buf, p.hi);
    bytes::put_f64(buf, p.bias);
    put_i32(buf, static_cast<int>(p.support.size()));
    for (double c : p.coef) bytes::put_f64(buf, c);
    for (const auto& sv : p.support)
      for (float v : sv) bytes::put_f32(buf, v);
  }
  bytes::write_file(path, buf, "CLF1");
}

std::unique_ptr<Classifier> load_classifier(const std::string& path) {
  const std::string buf = bytes::read_file(path, "classifier");
  if (buf.size() >= 5 && std::memcmp(buf.data(), "QNET1", 5) == 0) {
    std::size_t off = 0;
    auto net = nn::network_from_bytes(buf, off);
    if (off != buf.size()) throw FormatError("QNET1: trailing bytes");
    return std::make_unique<CnnClassifier>(std::move(net));
  }

  bytes::Reader r(buf, "CLF1");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "CLF1", 4) != 0)
    throw FormatError("CLF1: bad magic");
  if (r.u16() != 1) throw FormatError("CLF1: unsupported version");
  const std::uint16_t kind = r.u16();
  const std::uint64_t seed = r.u64();

  if (kind == kKindKnn) {
    KnnConfig cfg;
    cfg.k = get_i32(r);
    auto clf = std::make_unique<KnnClassifier>(cfg, seed);
    const int n = get_i32(r);
    clf->dim_ = get_i32(r);
    if (cfg.k < 1 || n < cfg.k || clf->dim_ < 1)
      throw FormatError("CLF1: bad knn geometry");
    clf->labels_.resize(n);
    for (auto& l : clf->labels_) l = get_i32(r);
    clf->points_.assign(n, std::vector<float>(clf->dim_));
    for (auto& p : clf->points_)
      for (auto& v : p) v = r.f32();
    if (r.remaining()) throw FormatError("CLF1: trailing bytes");
    return clf;
  }

  if (kind == kKindRf) {
    ForestConfig cfg;
    cfg.trees = get_i32(r);
    cfg.min_leaf = get_i32(r);
    auto clf = std::make_unique<ForestClassifier>(cfg, seed);
    clf->dim_ = get_i32(r);
    clf->classes_ = get_i32(r);
    const int n_trees = get_i32(r);
    if (clf->dim_ < 1 || clf->classes_ < 1 || n_trees < 1)
      throw FormatError("CLF1: bad forest geometry");
    clf->trees_.resize(n_trees);
    for (auto& tree : clf->trees_) {
      const int n_nodes = get_i32(r);
      if (n_nodes < 1) throw FormatError("CLF1: empty tree");
      tree.resize(n_nodes);
      for (auto& node : tree) {
        node.feature = get_i32(r);
        node.threshold = r.f32();
        node.left = r.u32();
        node.right = r.u32();
        node.label = get_i32(r);
        if (node.feature >= clf->dim_ ||
            (node.feature >= 0 &&
             (node.left >= static_cast<std::uint32_t>(n_nodes) ||
              node.right >= static_cast<std::uint32_t>(n_nodes))))
          throw FormatError("CLF1: tree node out of range");
      }
    }
    if (r.remaining()) throw FormatError("CLF1: trailing bytes");
    return clf;
  }

  if (kind == kKindSvm) {
    SvmConfig cfg;
    cfg.c = r.f64();
    cfg.degree = get_i32(r);
    cfg.tol = r.f64();
    cfg.max_passes = get_i32(r);
    auto clf = std::make_unique<SvmClassifier>(cfg, seed);
    clf->dim_ = get_i32(r);
    clf->classes_ = get_i32(r);
    const int n_pairs = get_i32(r);
    if (clf->dim_ < 1 || clf->classes_ < 2 || n_pairs < 1)
      throw FormatError("CLF1: bad svm geometry");
    clf->pairs_.resize(n_pairs);
    for (auto& p : clf->pairs_) {
      p.lo = get_i32(r);
      p.hi = get_i32(r);
      p.bias = r.f64();
      const int n_sv = get_i32(r);
      if (p.lo < 0 || p.hi <= p.lo || p.hi >= clf->classes_ || n_sv < 0)
        throw FormatError("CLF1: bad svm pair");
      p.coef.resize(n_sv);
      for (auto& c : p.coef) c = r.f64();
      p.support.assign(n_sv, std::vector<float>(clf->dim_));
      for (auto& sv : p.support)
        for (auto& v : sv) v = r.f32();
    }
    if (r.remaining()) throw FormatError("CLF1: trailing bytes");
    return clf;
  }

  throw FormatError("CLF1: unknown classifier kind");
}

}  // namespace colgrade
