#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "colgrade/classifiers.hpp"
#include "colgrade/dae.hpp"
#include "colgrade/synthgen.hpp"

namespace colgrade {

// Feature schemes from which the grading classifiers are fed.
enum class Scheme { raw, roi, roi_m, dae, hog, lbp };

std::string scheme_name(Scheme s);  // RAW, ROI, ROI+M, DAE, HOG, LBP
Scheme scheme_from_name(const std::string& name);

struct Dataset {
  std::vector<LabeledSample> samples;
  Scheme scheme = Scheme::roi;
  std::string manifest;  // CSV provenance, one line per sample
};

struct KFold {
  std::vector<std::vector<std::size_t>> folds;  // test indices per fold
  // False when some class has fewer members than folds, so per-fold class
  // counts can no longer be balanced.
  bool strict = true;
};

// Stratified split: per-class counts across folds differ by at most one.
// Deterministic in seed.
KFold kfold_split(const std::vector<int>& labels, int k, std::uint64_t seed);

struct EvalReport {
  std::string mode;  // three_class | cascaded_stage | cascaded_final
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::vector<std::vector<long>> confusion;  // confusion[truth][predicted]
};

// Test seam: maps a per-fold-seeded spec to a classifier. Defaults to
// make_classifier when empty.
using ClassifierFactory =
    std::function<std::unique_ptr<Classifier>(const ClassifierSpec&)>;

// One-step three-class cross-validation.
EvalReport evaluate_direct(const Dataset& data, const ClassifierSpec& spec,
                           std::uint64_t fold_seed = 0, int k = 5,
                           const ClassifierFactory& factory = {});

// Stage 1 separates good (2) from not-good (0, 1); stage 2, trained on the
// true not-good samples only, separates bad from medium. Test samples route
// through stage 1, then stage 2 when predicted not-good. Returns the stage-1
// binary report and the composed three-class report.
std::pair<EvalReport, EvalReport> evaluate_cascaded(
    const Dataset& data, const ClassifierSpec& stage1,
    const ClassifierSpec& stage2, std::uint64_t fold_seed = 0, int k = 5,
    const ClassifierFactory& factory = {});

struct FeatureOptions {
  int raw_edge = 64;        // RAW downsampling target edge
  DaeModel* dae = nullptr;  // required by Scheme::dae
};

// Assembles one dataset from phantoms. `rois` overrides the ground-truth
// ROI per phantom (e.g. with agent-localized cubes); empty uses the planted
// ones. RAW mean-pools the whole volumes to raw_edge^3; ROI extracts the
// 3-channel cube; ROI+M appends the cube mirrored across the midsagittal
// plane; DAE/HOG/LBP reduce the ROI cube to feature vectors.
Dataset build_feature_dataset(const std::vector<Phantom>& phantoms,
                              const std::vector<CubeState>& rois,
                              Scheme scheme, const FeatureOptions& opt = {});

// Rewrites cube samples as flat feature vectors (channels concatenated),
// the representation the vector classifiers (knn, rf, svm) consume for the
// RAW/ROI/ROI+M schemes. Vector samples pass through unchanged.
Dataset flatten_cubes(const Dataset& data);

// Table-cell accuracy formatting: "0.72(±0.05)".
std::string format_cell(double mean, double stddev);

struct ReportRow {
  std::string classifier;
  Scheme scheme = Scheme::roi;
  EvalReport report;
};

struct ReportFiles {
  std::string csv;
  std::string svg;
};

// Renders a results matrix (rows mode x classifier, columns scheme) as CSV
// plus a grouped-bar SVG into `dir`. Byte-deterministic given inputs.
ReportFiles report_emit(const std::vector<ReportRow>& rows,
                        const std::string& dir);

}  // namespace colgrade
