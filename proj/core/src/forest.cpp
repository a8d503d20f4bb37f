#include <algorithm>
#include <cmath>
#include <vector>

#include "colgrade/classifiers.hpp"
#include "colgrade/parallel.hpp"
#include "colgrade/rng.hpp"

namespace colgrade {

namespace {

struct Frame {
  std::vector<int> rows;
  std::uint32_t node;
};

int majority(const std::vector<int>& counts) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(counts.size()); ++k)
    if (counts[k] > counts[best]) best = k;
  return best;
}

double weighted_gini(const std::vector<int>& left,
                     const std::vector<int>& right, int nl, int nr) {
  const double n = nl + nr;
  return (nl * gini_impurity(left) + nr * gini_impurity(right)) / n;
}

std::vector<ForestClassifier::Node> grow_tree(
    const std::vector<std::vector<float>>& x, const std::vector<int>& y,
    int classes, int min_leaf, Rng& rng) {
  const int d = static_cast<int>(x.front().size());
  const int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
  const int n = static_cast<int>(x.size());

  std::vector<int> boot(n);
  for (auto& r : boot) r = static_cast<int>(rng.uniform_int(0, n - 1));

  std::vector<ForestClassifier::Node> nodes;
  std::vector<Frame> stack;
  nodes.emplace_back();
  stack.push_back({std::move(boot), 0});
  std::vector<int> features(d);
  for (int f = 0; f < d; ++f) features[f] = f;

  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    auto& rows = fr.rows;

    std::vector<int> counts(classes, 0);
    for (int r : rows) ++counts[y[r]];
    const double node_gini = gini_impurity(counts);
    const int total = static_cast<int>(rows.size());

    auto make_leaf = [&] {
      nodes[fr.node].feature = -1;
      nodes[fr.node].label = majority(counts);
    };
    if (node_gini == 0.0 || total < 2 * min_leaf) {
      make_leaf();
      continue;
    }

    // Draw the candidate feature subset for this node.
    for (int i = 0; i < m; ++i) {
      const int j =
          i + static_cast<int>(rng.uniform_int(0, d - 1 - i));
      std::swap(features[i], features[j]);
    }

    int best_f = -1;
    float best_thr = 0.0f;
    double best_score = node_gini;
    std::vector<std::pair<float, int>> vals(total);
    for (int i = 0; i < m; ++i) {
      const int f = features[i];
      for (int r = 0; r < total; ++r)
        vals[r] = {x[rows[r]][f], y[rows[r]]};
      std::sort(vals.begin(), vals.end());
      std::vector<int> left(classes, 0), right = counts;
      for (int r = 0; r + 1 < total; ++r) {
        ++left[vals[r].second];
        --right[vals[r].second];
        if (vals[r].first == vals[r + 1].first) continue;
        const int nl = r + 1, nr = total - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double score = weighted_gini(left, right, nl, nr);
        if (score < best_score - 1e-12) {
          best_score = score;
          best_f = f;
          best_thr = vals[r].first +
                     0.5f * (vals[r + 1].first - vals[r].first);
        }
      }
    }

    if (best_f < 0) {
      make_leaf();
      continue;
    }

    std::vector<int> lrows, rrows;
    for (int r : rows)
      (x[r][best_f] <= best_thr ? lrows : rrows).push_back(r);
    if (lrows.empty() || rrows.empty()) {
      make_leaf();
      continue;
    }

    nodes[fr.node].feature = best_f;
    nodes[fr.node].threshold = best_thr;
    const std::uint32_t li = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    nodes.emplace_back();
    nodes[fr.node].left = li;
    nodes[fr.node].right = li + 1;
    stack.push_back({std::move(rrows), li + 1});
    stack.push_back({std::move(lrows), li});
  }
  return nodes;
}

int tree_vote(const std::vector<ForestClassifier::Node>& nodes,
              const std::vector<float>& v) {
  std::uint32_t at = 0;
  while (nodes[at].feature >= 0)
    at = v[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left
                                                     : nodes[at].right;
  return nodes[at].label;
}

}  // namespace

void ForestClassifier::fit(const std::vector<LabeledSample>& data) {
  if (data.empty()) throw DataError("rf: empty training set");
  if (cfg_.trees < 1 || cfg_.min_leaf < 1)
    throw ConfigError("rf: trees and min_leaf must be >= 1");

  const int n = static_cast<int>(data.size());
  std::vector<std::vector<float>> x;
  std::vector<int> y;
  x.reserve(n);
  y.reserve(n);
  for (const auto& s : data) {
    if (s.is_cube()) throw ShapeError("rf: expects feature vectors");
    if (s.features.size() != data.front().features.size())
      throw ShapeError("rf: feature dimensions differ");
    if (s.label < 0 || s.label > 2) throw DataError("rf: label out of range");
    x.push_back(s.features);
    y.push_back(s.label);
  }
  dim_ = static_cast<int>(x.front().size());
  classes_ = *std::max_element(y.begin(), y.end()) + 1;

  const Rng master(seed_);
  std::vector<Rng> tree_rng;
  tree_rng.reserve(cfg_.trees);
  for (int t = 0; t < cfg_.trees; ++t)
    tree_rng.emplace_back(master.derive(static_cast<std::uint64_t>(t)));

  trees_.assign(cfg_.trees, {});
  // Bootstrap rows are re-derived per tree for the out-of-bag bookkeeping,
  // so each tree's rng must draw them identically: grow_tree draws the
  // bootstrap first, from a fresh copy of the same derived rng.
  std::vector<std::vector<int>> boots(cfg_.trees);
  parallel_for(static_cast<std::size_t>(cfg_.trees), [&](std::size_t t) {
    Rng peek = tree_rng[t];
    boots[t].resize(n);
    for (auto& r : boots[t]) r = static_cast<int>(peek.uniform_int(0, n - 1));
    trees_[t] = grow_tree(x, y, classes_, cfg_.min_leaf, tree_rng[t]);
  });

  std::vector<std::vector<int>> oob_votes(n, std::vector<int>(classes_, 0));
  std::vector<char> in_bag(n);
  for (int t = 0; t < cfg_.trees; ++t) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (int r : boots[t]) in_bag[r] = 1;
    for (int i = 0; i < n; ++i)
      if (!in_bag[i]) ++oob_votes[i][tree_vote(trees_[t], x[i])];
  }
  int evaluated = 0, correct = 0;
  for (int i = 0; i < n; ++i) {
    int sum = 0;
    for (int c : oob_votes[i]) sum += c;
    if (sum == 0) continue;
    ++evaluated;
    if (majority(oob_votes[i]) == y[i]) ++correct;
  }
  oob_accuracy_ =
      evaluated ? static_cast<double>(correct) / evaluated : -1.0;
}

std::vector<float> ForestClassifier::predict_proba(
    const LabeledSample& s) const {
  if (trees_.empty()) throw ConfigError("rf: predict before fit");
  if (s.is_cube()) throw ShapeError("rf: expects feature vectors");
  if (static_cast<int>(s.features.size()) != dim_)
    throw ShapeError("rf: query dimension mismatch");
  std::vector<float> votes(classes_, 0.0f);
  for (const auto& tree : trees_) votes[tree_vote(tree, s.features)] += 1.0f;
  for (auto& v : votes) v /= static_cast<float>(trees_.size());
  return votes;
}

int ForestClassifier::predict(const LabeledSample& s) const {
  const auto votes = predict_proba(s);
  return static_cast<int>(
      std::max_element(votes.begin(), votes.end()) - votes.begin());
}

double ForestClassifier::oob_accuracy() const {
  if (trees_.empty()) throw ConfigError("rf: oob accuracy before fit");
  return oob_accuracy_;
}

}  // namespace colgrade
