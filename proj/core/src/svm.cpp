#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "colgrade/classifiers.hpp"
#include "colgrade/parallel.hpp"

namespace colgrade {

namespace {

// Polynomial kernel (x.y / d + 1)^3: unit coef0, gamma = 1/dimension.
double kernel(const std::vector<float>& a, const std::vector<float>& b,
              int degree) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    dot += static_cast<double>(a[i]) * b[i];
  const double base = dot / static_cast<double>(a.size()) + 1.0;
  double r = 1.0;
  for (int i = 0; i < degree; ++i) r *= base;
  return r;
}

struct Smo {
  const std::vector<const std::vector<float>*>& x;
  const std::vector<double>& y;   // +1 / -1
  const std::vector<double>& c;   // per-sample box constraint
  int degree;
  double tol;
  int max_passes;

  int n = 0;
  std::vector<double> k;      // dense kernel matrix
  std::vector<double> alpha;
  std::vector<double> err;    // f(x_i) - y_i
  double b = 0.0;
  std::vector<double> trace;

  double kat(int i, int j) const { return k[static_cast<std::size_t>(i) * n + j]; }

  double objective() const {
    double obj = 0.0;
    for (int i = 0; i < n; ++i) {
      if (alpha[i] == 0.0) continue;
      obj += alpha[i];
      for (int j = 0; j < n; ++j) {
        if (alpha[j] == 0.0) continue;
        obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * kat(i, j);
      }
    }
    return obj;
  }

  bool take_step(int i1, int i2) {
    if (i1 == i2) return false;
    const double a1 = alpha[i1], a2 = alpha[i2];
    const double y1 = y[i1], y2 = y[i2];
    const double e1 = err[i1], e2 = err[i2];
    const double s = y1 * y2;
    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c[i2], c[i1] + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c[i1]);
      hi = std::min(c[i2], a1 + a2);
    }
    if (lo >= hi) return false;

    const double k11 = kat(i1, i1), k12 = kat(i1, i2), k22 = kat(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2new;
    if (eta > 0.0) {
      a2new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Degenerate curvature: evaluate the objective at both clip ends.
      const double f1 = y1 * (e1 + b) - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * (e2 + b) - s * a1 * k12 - a2 * k22;
      const double l1 = a1 + s * (a2 - lo), h1 = a1 + s * (a2 - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                            0.5 * lo * lo * k22 + s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                            0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (obj_lo < obj_hi - 1e-12)
        a2new = lo;
      else if (obj_hi < obj_lo - 1e-12)
        a2new = hi;
      else
        return false;
    }
    if (std::abs(a2new - a2) < 1e-12 * (a2new + a2 + 1e-12)) return false;
    const double a1new = a1 + s * (a2 - a2new);

    const double b1 = e1 + y1 * (a1new - a1) * k11 + y2 * (a2new - a2) * k12 + b;
    const double b2 = e2 + y1 * (a1new - a1) * k12 + y2 * (a2new - a2) * k22 + b;
    double bnew;
    if (a1new > 0.0 && a1new < c[i1])
      bnew = b1;
    else if (a2new > 0.0 && a2new < c[i2])
      bnew = b2;
    else
      bnew = 0.5 * (b1 + b2);

    const double d1 = y1 * (a1new - a1), d2 = y2 * (a2new - a2);
    for (int i = 0; i < n; ++i)
      err[i] += d1 * kat(i1, i) + d2 * kat(i2, i) - (bnew - b);
    alpha[i1] = a1new;
    alpha[i2] = a2new;
    b = bnew;
    trace.push_back(objective());
    return true;
  }

  bool examine(int i2) {
    const double y2 = y[i2], a2 = alpha[i2], e2 = err[i2];
    const double r2 = e2 * y2;
    if (!((r2 < -tol && a2 < c[i2]) || (r2 > tol && a2 > 0.0))) return false;

    // Second-choice heuristic: largest |e1 - e2| over the free multipliers.
    int best = -1;
    double gap = -1.0;
    for (int i = 0; i < n; ++i) {
      if (alpha[i] <= 0.0 || alpha[i] >= c[i]) continue;
      const double g = std::abs(err[i] - e2);
      if (g > gap) {
        gap = g;
        best = i;
      }
    }
    if (best >= 0 && take_step(best, i2)) return true;
    for (int off = 1; off <= n; ++off)
      if (take_step((i2 + off) % n, i2)) return true;
    return false;
  }

  void solve() {
    n = static_cast<int>(x.size());
    k.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        k[static_cast<std::size_t>(i) * n + j] =
            k[static_cast<std::size_t>(j) * n + i] = kernel(*x[i], *x[j], degree);
    alpha.assign(n, 0.0);
    err.resize(n);
    for (int i = 0; i < n; ++i) err[i] = -y[i];
    trace.push_back(objective());

    bool examine_all = true;
    for (int pass = 0; pass < max_passes; ++pass) {
      int changed = 0;
      if (examine_all) {
        for (int i = 0; i < n; ++i) changed += examine(i);
      } else {
        for (int i = 0; i < n; ++i)
          if (alpha[i] > 0.0 && alpha[i] < c[i]) changed += examine(i);
      }
      if (examine_all) {
        if (changed == 0) break;
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
  }
};

}  // namespace

void SvmClassifier::fit(const std::vector<LabeledSample>& data) {
  if (data.empty()) throw DataError("svm: empty training set");
  if (cfg_.c <= 0 || cfg_.degree < 1 || cfg_.tol <= 0 || cfg_.max_passes < 1)
    throw ConfigError("svm: bad hyperparameters");
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& s : data) {
    if (s.is_cube()) throw ShapeError("svm: expects feature vectors");
    if (s.features.size() != data.front().features.size())
      throw ShapeError("svm: feature dimensions differ");
    if (s.label < 0 || s.label > 2) throw DataError("svm: label out of range");
    labels.push_back(s.label);
  }
  dim_ = static_cast<int>(data.front().features.size());

  const std::set<int> present(labels.begin(), labels.end());
  if (present.size() < 2)
    throw DataError("svm: training requires at least two classes");
  classes_ = *present.rbegin() + 1;

  const auto weights = balanced_class_weights(labels, cfg_.c);

  struct PairJob {
    int lo, hi;
    std::vector<const std::vector<float>*> x;
    std::vector<double> y, c;
  };
  std::vector<PairJob> jobs;
  for (auto it = present.begin(); it != present.end(); ++it)
    for (auto jt = std::next(it); jt != present.end(); ++jt) {
      PairJob job;
      job.lo = *it;
      job.hi = *jt;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (labels[i] != job.lo && labels[i] != job.hi) continue;
        job.x.push_back(&data[i].features);
        job.y.push_back(labels[i] == job.lo ? 1.0 : -1.0);
        job.c.push_back(weights[labels[i]]);
      }
      jobs.push_back(std::move(job));
    }

  pairs_.assign(jobs.size(), {});
  traces_.assign(jobs.size(), {});
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto& job = jobs[j];
    Smo smo{job.x, job.y, job.c, cfg_.degree, cfg_.tol, cfg_.max_passes};
    smo.solve();
    PairModel m;
    m.lo = job.lo;
    m.hi = job.hi;
    m.bias = -smo.b;  // decision f(x) = sum coef K(sv, x) - b
    for (int i = 0; i < smo.n; ++i) {
      if (smo.alpha[i] <= 1e-12) continue;
      m.coef.push_back(smo.alpha[i] * job.y[i]);
      m.support.push_back(*job.x[i]);
    }
    pairs_[j] = std::move(m);
    traces_[j] = std::move(smo.trace);
  });
}

std::vector<float> SvmClassifier::predict_proba(const LabeledSample& s) const {
  if (pairs_.empty()) throw ConfigError("svm: predict before fit");
  if (s.is_cube()) throw ShapeError("svm: expects feature vectors");
  if (static_cast<int>(s.features.size()) != dim_)
    throw ShapeError("svm: query dimension mismatch");
  std::vector<float> votes(classes_, 0.0f);
  for (const auto& p : pairs_) {
    double f = p.bias;
    for (std::size_t i = 0; i < p.support.size(); ++i)
      f += p.coef[i] * kernel(p.support[i], s.features, cfg_.degree);
    votes[f >= 0.0 ? p.lo : p.hi] += 1.0f;
  }
  for (auto& v : votes) v /= static_cast<float>(pairs_.size());
  return votes;
}

int SvmClassifier::predict(const LabeledSample& s) const {
  const auto votes = predict_proba(s);
  return static_cast<int>(
      std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace colgrade
