#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "colgrade/errors.hpp"
#include "colgrade/pipeline.hpp"
#include "colgrade/rng.hpp"
#include "doctest.h"

using namespace colgrade;

namespace {

LabeledSample vec_sample(std::vector<float> v, int label, std::string id) {
  LabeledSample s;
  s.features = std::move(v);
  s.label = label;
  s.id = std::move(id);
  return s;
}

// Gaussian blobs at three well-separated centers, counts[c] points per class.
Dataset cluster_dataset(const std::array<int, 3>& counts, double spread,
                        std::uint64_t seed) {
  const double cx[3] = {0.0, 6.0, 0.0};
  const double cy[3] = {0.0, 0.0, 6.0};
  Rng rng(seed);
  Dataset ds;
  int serial = 0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < counts[c]; ++i)
      ds.samples.push_back(
          vec_sample({static_cast<float>(rng.normal(cx[c], spread)),
                      static_cast<float>(rng.normal(cy[c], spread))},
                     c, "v" + std::to_string(serial++)));
  return ds;
}

Dataset constant_dataset(const std::array<int, 3>& counts) {
  Dataset ds;
  int serial = 0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < counts[c]; ++i)
      ds.samples.push_back(vec_sample({1.0f, 2.0f}, c,
                                      "k" + std::to_string(serial++)));
  return ds;
}

// Fixed-rule classifier for exercising the harness without training noise.
struct StubClassifier : Classifier {
  std::function<int(const LabeledSample&)> rule;
  explicit StubClassifier(std::function<int(const LabeledSample&)> r)
      : rule(std::move(r)) {}
  void fit(const std::vector<LabeledSample>&) override {}
  int predict(const LabeledSample& s) const override { return rule(s); }
  std::vector<float> predict_proba(const LabeledSample& s) const override {
    std::vector<float> p(3, 0.0f);
    p[rule(s)] = 1.0f;
    return p;
  }
  void save(const std::string&) const override {}
};

ClassifierFactory stub_factory() {
  return [](const ClassifierSpec& spec) -> std::unique_ptr<Classifier> {
    if (spec.kind == "oracle")
      return std::make_unique<StubClassifier>(
          [](const LabeledSample& s) { return s.label; });
    if (spec.kind == "oracle-binary")
      return std::make_unique<StubClassifier>(
          [](const LabeledSample& s) { return s.label == 2 ? 1 : 0; });
    if (spec.kind == "always-good")
      return std::make_unique<StubClassifier>(
          [](const LabeledSample&) { return 1; });
    return make_classifier(spec);
  };
}

long confusion_total(const EvalReport& r) {
  long n = 0;
  for (const auto& row : r.confusion)
    for (long v : row) n += v;
  return n;
}

long confusion_diag(const EvalReport& r) {
  long n = 0;
  for (std::size_t i = 0; i < r.confusion.size(); ++i) n += r.confusion[i][i];
  return n;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("stratified folds balance classes and partition the samples") {
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 3);

  const KFold kf = kfold_split(labels, 5, 42);
  CHECK(kf.strict);
  REQUIRE(kf.folds.size() == 5);

  std::set<std::size_t> seen;
  for (const auto& fold : kf.folds) {
    CHECK(fold.size() == 6);
    int per_class[3] = {0, 0, 0};
    for (std::size_t i : fold) {
      CHECK(seen.insert(i).second);
      per_class[labels[i]] += 1;
    }
    for (int c = 0; c < 3; ++c) CHECK(per_class[c] == 2);
  }
  CHECK(seen.size() == 30);
  CHECK(*seen.rbegin() == 29);

  const KFold again = kfold_split(labels, 5, 42);
  CHECK(again.folds == kf.folds);
  const KFold other = kfold_split(labels, 5, 43);
  CHECK(other.folds != kf.folds);
}

TEST_CASE("fold splitting validates inputs and degrades for small classes") {
  std::vector<int> labels{0, 1, 2, 0, 1, 2};
  CHECK_THROWS_AS(kfold_split(labels, 1, 0), ConfigError);
  CHECK_THROWS_AS(kfold_split({0, 1, 2}, 5, 0), ConfigError);
  CHECK_THROWS_AS(kfold_split({0, -1, 2, 0, 1}, 2, 0), DataError);

  // Class 2 has fewer members than folds: still a partition, flagged loose.
  std::vector<int> skew;
  for (int i = 0; i < 10; ++i) skew.push_back(0);
  for (int i = 0; i < 10; ++i) skew.push_back(1);
  skew.push_back(2);
  skew.push_back(2);
  const KFold kf = kfold_split(skew, 5, 7);
  CHECK_FALSE(kf.strict);
  std::set<std::size_t> seen;
  for (const auto& fold : kf.folds)
    for (std::size_t i : fold) CHECK(seen.insert(i).second);
  CHECK(seen.size() == skew.size());
  for (const auto& fold : kf.folds) {
    int zeros = 0, ones = 0;
    for (std::size_t i : fold) {
      zeros += skew[i] == 0;
      ones += skew[i] == 1;
    }
    CHECK(zeros == 2);
    CHECK(ones == 2);
  }
}

TEST_CASE("direct cross-validation separates clustered features") {
  Dataset ds = cluster_dataset({10, 10, 10}, 0.3, 11);
  ClassifierSpec spec;
  spec.kind = "rf";
  spec.rf.trees = 50;
  spec.seed = 5;

  const EvalReport r = evaluate_direct(ds, spec, 3);
  CHECK(r.mode == "three_class");
  REQUIRE(r.fold_accuracy.size() == 5);
  CHECK(r.mean >= 0.95);
  CHECK(confusion_total(r) == 30);
  CHECK(r.mean == doctest::Approx(confusion_diag(r) / 30.0).epsilon(1e-12));
  for (double a : r.fold_accuracy) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }

  const EvalReport again = evaluate_direct(ds, spec, 3);
  CHECK(again.fold_accuracy == r.fold_accuracy);
  CHECK(again.confusion == r.confusion);
}

TEST_CASE("direct accuracy collapses to prevalence on constant features") {
  Dataset ds = constant_dataset({18, 6, 6});
  ClassifierSpec spec;
  spec.kind = "rf";
  spec.rf.trees = 25;
  spec.seed = 9;

  const EvalReport r = evaluate_direct(ds, spec, 1);
  CHECK(std::abs(r.mean - 0.6) <= 0.1);
}

TEST_CASE("evaluation rejects malformed datasets") {
  Dataset empty;
  ClassifierSpec spec;
  CHECK_THROWS_AS(evaluate_direct(empty, spec), DataError);

  Dataset dup = constant_dataset({3, 3, 3});
  dup.samples[4].id = dup.samples[2].id;
  CHECK_THROWS_AS(evaluate_direct(dup, spec, 0, 3), DataError);

  Dataset bad = constant_dataset({3, 3, 3});
  bad.samples[0].label = 7;
  CHECK_THROWS_AS(evaluate_direct(bad, spec, 0, 3), DataError);
}

TEST_CASE("oracle classifiers make cross-validation exact") {
  Dataset ds = constant_dataset({10, 10, 10});
  ClassifierSpec oracle;
  oracle.kind = "oracle";

  const EvalReport direct = evaluate_direct(ds, oracle, 2, 5, stub_factory());
  CHECK(direct.mean == 1.0);
  CHECK(direct.stddev == 0.0);
  for (double a : direct.fold_accuracy) CHECK(a == 1.0);
  CHECK(confusion_diag(direct) == 30);

  ClassifierSpec stage1;
  stage1.kind = "oracle-binary";
  ClassifierSpec stage2;
  stage2.kind = "oracle";
  const auto [stage, final_r] =
      evaluate_cascaded(ds, stage1, stage2, 2, 5, stub_factory());
  CHECK(stage.mode == "cascaded_stage");
  CHECK(final_r.mode == "cascaded_final");
  CHECK(stage.mean == 1.0);
  CHECK(final_r.mean == 1.0);
  CHECK(final_r.stddev == 0.0);
  CHECK(confusion_diag(final_r) == 30);
  CHECK(confusion_total(final_r) == 30);
  REQUIRE(stage.confusion.size() == 2);
  CHECK(stage.confusion[0][0] == 20);
  CHECK(stage.confusion[1][1] == 10);
}

TEST_CASE("always-good first stage routes every sample to the good grade") {
  Dataset ds = constant_dataset({20, 5, 5});
  ClassifierSpec stage1;
  stage1.kind = "always-good";
  ClassifierSpec stage2;
  stage2.kind = "oracle";

  const auto [stage, final_r] =
      evaluate_cascaded(ds, stage1, stage2, 4, 5, stub_factory());
  // Folds hold 4/1/1 of the classes, so exactly the one good sample per
  // fold is right.
  CHECK(final_r.mean == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(final_r.stddev == doctest::Approx(0.0));
  CHECK(final_r.confusion[0][2] == 20);
  CHECK(final_r.confusion[1][2] == 5);
  CHECK(final_r.confusion[2][2] == 5);
  CHECK(stage.mean == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(confusion_total(final_r) == 30);
}

TEST_CASE("cascading beats direct grading on an imbalanced phantom set") {
  const auto phantoms = gen_dataset({20, 5, 5}, 404, {32, 32, 32}, 8);
  const Dataset ds = build_feature_dataset(phantoms, {}, Scheme::hog);

  ClassifierSpec spec;
  spec.kind = "rf";
  spec.rf.trees = 100;
  spec.seed = 17;

  const EvalReport direct = evaluate_direct(ds, spec, 6);
  const auto [stage, final_r] = evaluate_cascaded(ds, spec, spec, 6);
  CHECK(final_r.mean >= direct.mean);
  CHECK(confusion_total(final_r) == 30);
  CHECK(confusion_total(direct) == 30);
}

TEST_CASE("feature schemes produce the documented shapes") {
  const auto phantoms = gen_dataset({2, 2, 2}, 99, {32, 32, 32}, 8);
  REQUIRE(phantoms.size() == 6);

  const Dataset roi = build_feature_dataset(phantoms, {}, Scheme::roi);
  REQUIRE(roi.samples.size() == 6);
  for (const auto& s : roi.samples) {
    REQUIRE(s.is_cube());
    CHECK(s.cube.channels.size() == 3);
    CHECK(s.cube.edge == 8);
  }
  CHECK(roi.samples[0].id == "s0000");
  CHECK(roi.samples[5].id == "s0005");
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(roi.samples[i].label == static_cast<int>(i % 3));
  CHECK(roi.manifest.substr(0, 9) == "id,label,");
  CHECK(roi.manifest.find("s0000,0,ROI,") != std::string::npos);
  CHECK(std::count(roi.manifest.begin(), roi.manifest.end(), '\n') == 7);

  const Dataset roim = build_feature_dataset(phantoms, {}, Scheme::roi_m);
  for (const auto& s : roim.samples) CHECK(s.cube.channels.size() == 6);

  const Dataset hog = build_feature_dataset(phantoms, {}, Scheme::hog);
  for (const auto& s : hog.samples) {
    CHECK_FALSE(s.is_cube());
    CHECK(s.features.size() == 30);
  }

  const Dataset lbp = build_feature_dataset(phantoms, {}, Scheme::lbp);
  for (const auto& s : lbp.samples) CHECK(s.features.size() == 653);

  FeatureOptions raw_opt;
  raw_opt.raw_edge = 16;
  const Dataset raw = build_feature_dataset(phantoms, {}, Scheme::raw, raw_opt);
  for (const auto& s : raw.samples) {
    CHECK(s.cube.channels.size() == 3);
    CHECK(s.cube.edge == 16);
    for (const auto& ch : s.cube.channels)
      for (float v : ch) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
  }

  // Upsampling target still fills every cell.
  raw_opt.raw_edge = 40;
  const Dataset raw_up =
      build_feature_dataset(phantoms, {}, Scheme::raw, raw_opt);
  CHECK(raw_up.samples[0].cube.edge == 40);
  for (float v : raw_up.samples[0].cube.channels[0]) CHECK(std::isfinite(v));
}

TEST_CASE("feature assembly honors overrides and rejects mismatches") {
  const auto phantoms = gen_dataset({1, 1, 1}, 5, {32, 32, 32}, 8);

  const Dataset gt = build_feature_dataset(phantoms, {}, Scheme::roi);
  std::vector<CubeState> rois;
  for (const auto& ph : phantoms) rois.push_back(ph.roi);
  const Dataset forced = build_feature_dataset(phantoms, rois, Scheme::roi);
  REQUIRE(gt.samples.size() == forced.samples.size());
  for (std::size_t i = 0; i < gt.samples.size(); ++i) {
    CHECK(gt.samples[i].id == forced.samples[i].id);
    CHECK(gt.samples[i].label == forced.samples[i].label);
    CHECK(gt.samples[i].cube.channels == forced.samples[i].cube.channels);
  }

  // A shifted override changes the content but not the bookkeeping.
  rois[0].corner[0] += 4;
  const Dataset shifted = build_feature_dataset(phantoms, rois, Scheme::roi);
  CHECK(shifted.samples[0].id == gt.samples[0].id);
  CHECK(shifted.samples[0].cube.channels != gt.samples[0].cube.channels);

  rois.pop_back();
  CHECK_THROWS_AS(build_feature_dataset(phantoms, rois, Scheme::roi),
                  ConfigError);
  CHECK_THROWS_AS(build_feature_dataset(phantoms, {}, Scheme::dae),
                  ConfigError);
  CHECK_THROWS_AS(build_feature_dataset({}, {}, Scheme::roi), DataError);
}

TEST_CASE("dae features use the encoder code length") {
  const auto phantoms = gen_dataset({1, 1, 1}, 12, {32, 32, 32}, 8);
  DaeConfig cfg;
  cfg.edge = 8;
  DaeModel model = dae_build(cfg, 3);
  FeatureOptions opt;
  opt.dae = &model;
  const Dataset ds = build_feature_dataset(phantoms, {}, Scheme::dae, opt);
  for (const auto& s : ds.samples) {
    CHECK_FALSE(s.is_cube());
    CHECK(s.features.size() == static_cast<std::size_t>(model.code_len));
  }
}

TEST_CASE("flattening turns cubes into voxel vectors") {
  const auto phantoms = gen_dataset({1, 1, 1}, 31, {32, 32, 32}, 8);
  const Dataset roi = build_feature_dataset(phantoms, {}, Scheme::roi);
  const Dataset flat = flatten_cubes(roi);
  REQUIRE(flat.samples.size() == roi.samples.size());
  for (std::size_t i = 0; i < flat.samples.size(); ++i) {
    const auto& f = flat.samples[i];
    const auto& c = roi.samples[i];
    CHECK_FALSE(f.is_cube());
    CHECK(f.id == c.id);
    CHECK(f.label == c.label);
    REQUIRE(f.features.size() == 3 * c.cube.voxels_per_channel());
    CHECK(f.features[0] == c.cube.channels[0][0]);
    const std::size_t per = c.cube.voxels_per_channel();
    CHECK(f.features[per] == c.cube.channels[1][0]);
    CHECK(f.features.back() == c.cube.channels[2].back());
  }

  // Vector datasets pass through untouched.
  const Dataset hog = build_feature_dataset(phantoms, {}, Scheme::hog);
  const Dataset same = flatten_cubes(hog);
  for (std::size_t i = 0; i < same.samples.size(); ++i)
    CHECK(same.samples[i].features == hog.samples[i].features);

  // The flattened form is what the vector classifiers accept.
  ClassifierSpec spec;
  spec.kind = "knn";
  spec.knn.k = 1;
  auto clf = make_classifier(spec);
  clf->fit(flat.samples);
  CHECK(clf->predict(flat.samples[0]) == flat.samples[0].label);
}

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::raw, Scheme::roi, Scheme::roi_m, Scheme::dae,
                   Scheme::hog, Scheme::lbp})
    CHECK(scheme_from_name(scheme_name(s)) == s);
  CHECK(scheme_name(Scheme::roi_m) == "ROI+M");
  CHECK_THROWS_AS(scheme_from_name("roi"), ConfigError);
}

TEST_CASE("table cells format like the published matrix") {
  CHECK(format_cell(0.7234, 0.0517) == "0.72(±0.05)");
  CHECK(format_cell(1.0, 0.0) == "1.00(±0.00)");
  CHECK(format_cell(0.005, 0.955) == "0.01(±0.95)");
}

TEST_CASE("result files render deterministically") {
  EvalReport r;
  r.mode = "three_class";
  r.fold_accuracy = {0.7, 0.75, 0.7, 0.75, 0.7};
  r.mean = 0.72;
  r.stddev = 0.05;
  r.confusion = {{7, 2, 1}, {2, 7, 1}, {1, 1, 8}};

  ReportRow row;
  row.classifier = "rf";
  row.scheme = Scheme::roi;
  row.report = r;

  const std::string dir = "/tmp/colgrade_report_one";
  const ReportFiles files = report_emit({row}, dir);
  const std::string csv = slurp(files.csv);
  CHECK(csv == "mode,classifier,ROI\nthree_class,rf,0.72(±0.05)\n");
  const std::string svg = slurp(files.svg);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("ROI") != std::string::npos);

  // Row and column order is fixed by mode, classifier, and scheme ranks,
  // not by insertion order.
  ReportRow raw_row = row;
  raw_row.scheme = Scheme::raw;
  raw_row.report.mean = 0.55;
  ReportRow casc = row;
  casc.report.mode = "cascaded_final";
  casc.report.mean = 0.8;
  ReportRow knn_row = row;
  knn_row.classifier = "knn";

  const std::string dir2 = "/tmp/colgrade_report_grid";
  const ReportFiles grid = report_emit({casc, knn_row, row, raw_row}, dir2);
  const std::string gcsv = slurp(grid.csv);
  CHECK(gcsv ==
        "mode,classifier,RAW,ROI\n"
        "three_class,knn,,0.72(±0.05)\n"
        "three_class,rf,0.55(±0.05),0.72(±0.05)\n"
        "cascaded_final,rf,,0.80(±0.05)\n");

  const ReportFiles rerun = report_emit({casc, knn_row, row, raw_row}, dir2);
  CHECK(slurp(rerun.csv) == gcsv);
  CHECK(slurp(rerun.svg) == slurp(grid.svg));

  CHECK_THROWS_AS(report_emit({}, dir), DataError);
  CHECK_THROWS_AS(report_emit({row, row}, dir), DataError);
}
