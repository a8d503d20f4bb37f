#include <algorithm>
#include <cmath>
#include <vector>

#include "colgrade/classifiers.hpp"

namespace colgrade {

namespace {

const std::vector<float>& vector_of(const LabeledSample& s, const char* who) {
  if (s.is_cube())
    throw ShapeError(std::string(who) + ": expects feature vectors");
  return s.features;
}

double sq_dist(const std::vector<float>& a, const std::vector<float>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = static_cast<double>(a[i]) - b[i];
    d += t * t;
  }
  return d;
}

}  // namespace

void KnnClassifier::fit(const std::vector<LabeledSample>& data) {
  if (data.empty()) throw DataError("knn: empty training set");
  if (cfg_.k < 1) throw ConfigError("knn: k must be >= 1");
  if (static_cast<std::size_t>(cfg_.k) > data.size())
    throw DataError("knn: k exceeds training size");
  dim_ = static_cast<int>(vector_of(data.front(), "knn").size());
  points_.clear();
  labels_.clear();
  points_.reserve(data.size());
  labels_.reserve(data.size());
  for (const auto& s : data) {
    const auto& v = vector_of(s, "knn");
    if (static_cast<int>(v.size()) != dim_)
      throw ShapeError("knn: feature dimensions differ");
    if (s.label < 0 || s.label > 2)
      throw DataError("knn: label out of range");
    points_.push_back(v);
    labels_.push_back(s.label);
  }
}

std::vector<float> KnnClassifier::predict_proba(const LabeledSample& s) const {
  if (points_.empty()) throw ConfigError("knn: predict before fit");
  const auto& q = vector_of(s, "knn");
  if (static_cast<int>(q.size()) != dim_)
    throw ShapeError("knn: query dimension mismatch");

  std::vector<std::size_t> idx(points_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<double> dist(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i)
    dist[i] = sq_dist(q, points_[i]);
  // Distance ties resolve to the earlier training point.
  std::partial_sort(idx.begin(), idx.begin() + cfg_.k, idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist[a] != dist[b]) return dist[a] < dist[b];
                      return a < b;
                    });

  const int classes =
      *std::max_element(labels_.begin(), labels_.end()) + 1;
  std::vector<float> votes(classes, 0.0f);
  for (int i = 0; i < cfg_.k; ++i) votes[labels_[idx[i]]] += 1.0f;
  for (auto& v : votes) v /= static_cast<float>(cfg_.k);
  return votes;
}

int KnnClassifier::predict(const LabeledSample& s) const {
  const auto votes = predict_proba(s);
  return static_cast<int>(
      std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace colgrade
