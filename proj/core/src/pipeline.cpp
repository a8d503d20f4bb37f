#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "colgrade/descriptors.hpp"
#include "colgrade/parallel.hpp"
#include "colgrade/pipeline.hpp"
#include "colgrade/rng.hpp"

namespace colgrade {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::raw: return "RAW";
    case Scheme::roi: return "ROI";
    case Scheme::roi_m: return "ROI+M";
    case Scheme::dae: return "DAE";
    case Scheme::hog: return "HOG";
    case Scheme::lbp: return "LBP";
  }
  throw ConfigError("scheme: unknown enumerator");
}

Scheme scheme_from_name(const std::string& name) {
  for (Scheme s : {Scheme::raw, Scheme::roi, Scheme::roi_m, Scheme::dae,
                   Scheme::hog, Scheme::lbp})
    if (scheme_name(s) == name) return s;
  throw ConfigError("scheme: unknown name: " + name);
}

KFold kfold_split(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("kfold: k must be >= 2");
  if (labels.size() < static_cast<std::size_t>(k))
    throw ConfigError("kfold: fewer samples than folds");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw DataError("kfold: negative label");
    by_class[labels[i]].push_back(i);
  }

  KFold out;
  out.folds.assign(k, {});
  Rng rng(seed);
  std::size_t next = 0;  // dealing position carries across classes
  for (auto& [label, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(k)) {
      out.strict = false;
      std::fprintf(stderr,
                   "warning: class %d has %zu samples for %d folds; "
                   "stratification is best-effort\n",
                   label, idx.size(), k);
    }
    shuffle(idx, rng);
    for (std::size_t i : idx) out.folds[next++ % k].push_back(i);
  }
  for (auto& f : out.folds) std::sort(f.begin(), f.end());
  return out;
}

Dataset flatten_cubes(const Dataset& data) {
  Dataset out;
  out.scheme = data.scheme;
  out.manifest = data.manifest;
  out.samples.reserve(data.samples.size());
  for (const auto& s : data.samples) {
    LabeledSample flat;
    flat.label = s.label;
    flat.id = s.id;
    if (s.is_cube()) {
      flat.features.reserve(s.cube.channels.size() *
                            s.cube.voxels_per_channel());
      for (const auto& ch : s.cube.channels)
        flat.features.insert(flat.features.end(), ch.begin(), ch.end());
    } else {
      flat.features = s.features;
    }
    out.samples.push_back(std::move(flat));
  }
  return out;
}

std::string format_cell(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f(±%.2f)", mean, stddev);
  return buf;
}

namespace {

std::vector<int> dataset_labels(const Dataset& data) {
  std::vector<int> labels;
  labels.reserve(data.samples.size());
  for (const auto& s : data.samples) labels.push_back(s.label);
  return labels;
}

void check_dataset(const Dataset& data) {
  if (data.samples.empty()) throw DataError("evaluate: empty dataset");
  std::set<std::string> ids;
  for (const auto& s : data.samples) {
    if (s.label < 0 || s.label > 2)
      throw DataError("evaluate: label out of range");
    if (!ids.insert(s.id).second)
      throw DataError("evaluate: duplicate sample id: " + s.id);
  }
}

// The id-level guard behind the no-leak invariant: training rows must not
// share an id with the held-out fold.
void check_leak(const std::vector<LabeledSample>& train,
                const std::vector<const LabeledSample*>& test) {
  std::set<std::string> held;
  for (const auto* s : test) held.insert(s->id);
  for (const auto& s : train)
    if (held.count(s.id))
      throw DataError("evaluate: test sample leaked into training: " + s.id);
}

struct FoldData {
  std::vector<LabeledSample> train;
  std::vector<const LabeledSample*> test;
};

FoldData split_fold(const Dataset& data, const std::vector<std::size_t>& fold) {
  FoldData fd;
  std::vector<char> held(data.samples.size(), 0);
  for (std::size_t i : fold) held[i] = 1;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (held[i])
      fd.test.push_back(&data.samples[i]);
    else
      fd.train.push_back(data.samples[i]);
  }
  check_leak(fd.train, fd.test);
  return fd;
}

std::unique_ptr<Classifier> build(const ClassifierFactory& factory,
                                  ClassifierSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  return factory ? factory(spec) : make_classifier(spec);
}

void finish(EvalReport& r) {
  double sum = 0.0;
  for (double a : r.fold_accuracy) sum += a;
  r.mean = sum / r.fold_accuracy.size();
  double var = 0.0;
  for (double a : r.fold_accuracy) var += (a - r.mean) * (a - r.mean);
  r.stddev = std::sqrt(var / r.fold_accuracy.size());
}

using Confusion = std::vector<std::vector<long>>;

Confusion zero_confusion(int classes) {
  return Confusion(classes, std::vector<long>(classes, 0));
}

void merge(Confusion& into, const Confusion& part) {
  for (std::size_t i = 0; i < into.size(); ++i)
    for (std::size_t j = 0; j < into.size(); ++j) into[i][j] += part[i][j];
}

}  // namespace

EvalReport evaluate_direct(const Dataset& data, const ClassifierSpec& spec,
                           std::uint64_t fold_seed, int k,
                           const ClassifierFactory& factory) {
  check_dataset(data);
  const auto kf = kfold_split(dataset_labels(data), k, fold_seed);
  const Rng seeder(spec.seed);

  std::vector<double> accs(k, 0.0);
  std::vector<Confusion> confs(k, zero_confusion(3));
  parallel_for(static_cast<std::size_t>(k), [&](std::size_t fold) {
    const auto fd = split_fold(data, kf.folds[fold]);
    auto clf = build(factory, spec, seeder.derive(fold));
    clf->fit(fd.train);
    long correct = 0;
    for (const auto* s : fd.test) {
      const int pred = clf->predict(*s);
      if (pred < 0 || pred > 2)
        throw DataError("evaluate: prediction out of range");
      confs[fold][s->label][pred] += 1;
      correct += pred == s->label;
    }
    accs[fold] = fd.test.empty()
                     ? 0.0
                     : static_cast<double>(correct) / fd.test.size();
  });

  EvalReport report;
  report.mode = "three_class";
  report.fold_accuracy = accs;
  report.confusion = zero_confusion(3);
  for (const auto& c : confs) merge(report.confusion, c);
  finish(report);
  return report;
}

std::pair<EvalReport, EvalReport> evaluate_cascaded(
    const Dataset& data, const ClassifierSpec& stage1,
    const ClassifierSpec& stage2, std::uint64_t fold_seed, int k,
    const ClassifierFactory& factory) {
  check_dataset(data);
  const auto kf = kfold_split(dataset_labels(data), k, fold_seed);
  const Rng seeder1(stage1.seed), seeder2(stage2.seed);

  std::vector<double> acc1(k, 0.0), acc_final(k, 0.0);
  std::vector<Confusion> conf1(k, zero_confusion(2));
  std::vector<Confusion> conf_final(k, zero_confusion(3));
  parallel_for(static_cast<std::size_t>(k), [&](std::size_t fold) {
    auto fd = split_fold(data, kf.folds[fold]);

    // Stage 1 learns good (2) against not-good (0, 1) on relabeled copies.
    std::vector<LabeledSample> train1 = fd.train;
    for (auto& s : train1) s.label = s.label == 2 ? 1 : 0;
    auto s1 = build(factory, stage1, seeder1.derive(fold));
    s1->fit(train1);

    // Stage 2 learns bad against medium on the true not-good samples.
    std::vector<LabeledSample> train2;
    for (const auto& s : fd.train)
      if (s.label != 2) train2.push_back(s);
    auto s2 = build(factory, stage2, seeder2.derive(fold));
    s2->fit(train2);

    long correct1 = 0, correct_final = 0;
    for (const auto* s : fd.test) {
      const int truth1 = s->label == 2 ? 1 : 0;
      const int pred1 = s1->predict(*s);
      if (pred1 != 0 && pred1 != 1)
        throw DataError("evaluate: stage-1 prediction out of range");
      conf1[fold][truth1][pred1] += 1;
      correct1 += pred1 == truth1;

      const int final_label = pred1 == 1 ? 2 : s2->predict(*s);
      if (final_label < 0 || final_label > 2)
        throw DataError("evaluate: stage-2 prediction out of range");
      conf_final[fold][s->label][final_label] += 1;
      correct_final += final_label == s->label;
    }
    const double n = static_cast<double>(fd.test.size());
    acc1[fold] = fd.test.empty() ? 0.0 : correct1 / n;
    acc_final[fold] = fd.test.empty() ? 0.0 : correct_final / n;
  });

  EvalReport stage, final_report;
  stage.mode = "cascaded_stage";
  stage.fold_accuracy = acc1;
  stage.confusion = zero_confusion(2);
  for (const auto& c : conf1) merge(stage.confusion, c);
  finish(stage);

  final_report.mode = "cascaded_final";
  final_report.fold_accuracy = acc_final;
  final_report.confusion = zero_confusion(3);
  for (const auto& c : conf_final) merge(final_report.confusion, c);
  finish(final_report);
  return {stage, final_report};
}

namespace {

// Mean pooling onto an edge^3 grid; each output cell averages its integer
// box, boxes never empty (coordinates repeat when the axis is shorter than
// the target edge).
std::vector<float> pool_volume(const Volume3D& v, int edge) {
  std::vector<float> out(static_cast<std::size_t>(edge) * edge * edge);
  const auto lo = [](int o, int n, int e) { return o * n / e; };
  std::size_t w = 0;
  for (int oz = 0; oz < edge; ++oz) {
    const int z0 = lo(oz, v.dims[2], edge);
    const int z1 = std::max(z0 + 1, lo(oz + 1, v.dims[2], edge));
    for (int oy = 0; oy < edge; ++oy) {
      const int y0 = lo(oy, v.dims[1], edge);
      const int y1 = std::max(y0 + 1, lo(oy + 1, v.dims[1], edge));
      for (int ox = 0; ox < edge; ++ox) {
        const int x0 = lo(ox, v.dims[0], edge);
        const int x1 = std::max(x0 + 1, lo(ox + 1, v.dims[0], edge));
        double acc = 0.0;
        for (int z = z0; z < z1; ++z)
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) acc += v.at(x, y, z);
        out[w++] = static_cast<float>(
            acc / (static_cast<double>(z1 - z0) * (y1 - y0) * (x1 - x0)));
      }
    }
  }
  return out;
}

std::vector<float> to_float(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

// Min-max rescale of a whole map to [0,1]. Runs once per phantom so crops
// keep their contrast relative to the rest of the volume.
Volume3D normalize_volume(const Volume3D& v) {
  Volume3D out = v;
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (float x : v.data) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi > lo) {
    const float inv = 1.0f / (hi - lo);
    for (float& x : out.data) x = (x - lo) * inv;
  } else {
    for (float& x : out.data) x = 0.0f;
  }
  return out;
}

}  // namespace

Dataset build_feature_dataset(const std::vector<Phantom>& phantoms,
                              const std::vector<CubeState>& rois,
                              Scheme scheme, const FeatureOptions& opt) {
  if (phantoms.empty())
    throw DataError("feature dataset: no phantoms");
  if (!rois.empty() && rois.size() != phantoms.size())
    throw ConfigError("feature dataset: roi count does not match phantoms");
  if (scheme == Scheme::dae && opt.dae == nullptr)
    throw ConfigError("feature dataset: dae scheme needs a trained model");
  if (scheme == Scheme::raw && opt.raw_edge < 1)
    throw ConfigError("feature dataset: raw edge must be >= 1");

  Dataset out;
  out.scheme = scheme;
  out.manifest = "id,label,scheme,corner_x,corner_y,corner_z,roi_edge\n";
  for (std::size_t i = 0; i < phantoms.size(); ++i) {
    const Phantom& ph = phantoms[i];
    const CubeState roi = rois.empty() ? ph.roi : rois[i];
    const Volume3D tmax = normalize_volume(ph.tmax);
    const Volume3D rbf = normalize_volume(ph.rbf);
    const Volume3D rbv = normalize_volume(ph.rbv);
    const std::vector<const Volume3D*> maps{&tmax, &rbf, &rbv};

    LabeledSample s;
    s.label = ph.label;
    char id[16];
    std::snprintf(id, sizeof(id), "s%04zu", i);
    s.id = id;

    switch (scheme) {
      case Scheme::raw: {
        Cube c;
        c.edge = opt.raw_edge;
        for (const auto* m : maps) c.channels.push_back(pool_volume(*m, c.edge));
        s.cube = std::move(c);
        break;
      }
      case Scheme::roi:
        s.cube = extract_cube(maps, roi);
        break;
      case Scheme::roi_m: {
        Cube c = extract_cube(maps, roi);
        const Cube m = extract_cube(maps, mirror_corner(roi, ph.tmax.dims));
        for (const auto& ch : m.channels) c.channels.push_back(ch);
        s.cube = std::move(c);
        break;
      }
      case Scheme::dae:
        s.features = dae_encode(*opt.dae, extract_cube(maps, roi));
        break;
      case Scheme::hog:
        s.features = to_float(hog_histogram(extract_cube(maps, roi)));
        break;
      case Scheme::lbp:
        s.features = to_float(lbp_histogram(extract_cube(maps, roi)));
        break;
    }

    char line[128];
    std::snprintf(line, sizeof(line), "%s,%d,%s,%d,%d,%d,%d\n", s.id.c_str(),
                  s.label, scheme_name(scheme).c_str(), roi.corner[0],
                  roi.corner[1], roi.corner[2], roi.edge);
    out.manifest += line;
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace colgrade
