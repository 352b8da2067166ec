#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mtof/baselines.hpp"
#include "mtof/data_model.hpp"
#include "mtof/representation.hpp"
#include "mtof/spoof_classifier.hpp"

namespace mtof {

struct ScoredSample {
  std::string sample_id;
  Label true_label = Label::kReal;
  double score = 0.0;  // p_display
  Label predicted_label = Label::kReal;
  std::string display_id;
  std::string display_type;
  std::string device_type;
};

// Fraction of correct predicted labels.
double accuracy(const std::vector<ScoredSample>& samples);

// Mann-Whitney form: probability a random display sample outscores a random
// real sample, ties counted 1/2. Requires both classes.
double auroc(const std::vector<ScoredSample>& samples);

// Mean precision at each positive's rank; descending score, ties ordered by
// ascending sample_id. Requires at least one positive.
double average_precision(const std::vector<ScoredSample>& samples);

struct Metrics {
  double acc = 0.0;
  double auroc = 0.0;
  double ap = 0.0;
  int n = 0;
};

Metrics compute_metrics(const std::vector<ScoredSample>& samples);

// ---------------------------------------------------------------------------
// Models under evaluation
// ---------------------------------------------------------------------------

// Everything needed to train any of the evaluated detectors.
struct ModelConfig {
  std::string name = "mtofnet";  // mtofnet | mtofnet_norep | pca_svm |
                                 // freq_svm_tof | freq_svm_image |
                                 // naive_cnn | image_cnn
  RepNetConfig rep;
  TrainConfig rep_train;
  ClassifierTrainConfig clf_train;
  int clf_hidden = 128;
  NaiveCnnConfig cnn;
  SvmTrainConfig svm;
  std::uint64_t seed = 0;
};

// A trained detector: maps a preprocessed pair to p_display.
struct TrainedDetector {
  std::function<double(const PairSample&)> score;
  std::shared_ptr<RepNet> repnet;            // set for mtofnet variants
  std::shared_ptr<SpoofClassifier> classifier;
};

TrainedDetector train_detector(const ModelConfig& cfg,
                               const std::vector<PairSample>& train);

std::vector<ScoredSample> score_samples(const TrainedDetector& det,
                                        const std::vector<PairSample>& test);

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

enum class ProtocolMode { kTarget, kUnseen, kAll };

const char* to_string(ProtocolMode mode);

struct EvalReport {
  std::string protocol;
  std::string model;
  std::vector<std::string> train_display_ids;
  std::vector<std::string> test_display_ids;
  Metrics metrics;
  std::map<std::string, Metrics> by_display_id;
  std::map<std::string, Metrics> by_device_type;
  std::vector<ScoredSample> scored;
};

// Partition helpers (exposed for the leakage property test). Real samples
// appear in every condition; only display media vary.
std::vector<PairSample> train_partition(const std::vector<PairSample>& all,
                                        const std::vector<std::string>& train_displays);
std::vector<PairSample> test_partition(const std::vector<PairSample>& all,
                                       const std::vector<std::string>& train_displays,
                                       ProtocolMode mode);

// Trains on real samples plus the given displays' train split, evaluates the
// test split under the requested mode. Unseen mode asserts zero display-id
// leakage between train and test.
EvalReport run_protocol(const ModelConfig& cfg, const std::vector<PairSample>& all,
                        const std::vector<std::string>& train_displays,
                        ProtocolMode mode);

// Ablations: full model, image-only CNN (w/o ToF), 4-channel CNN
// (w/o representation network), and full model with the representation loss
// weight zeroed.
std::map<std::string, EvalReport> ablation_suite(const ModelConfig& cfg,
                                                 const std::vector<PairSample>& all,
                                                 const std::vector<std::string>& train_displays,
                                                 ProtocolMode mode);

// Trains the augmented naive CNN on k displays for each k and reports the
// unseen metrics per k.
struct MoirePoint {
  int k = 0;
  std::vector<std::string> train_displays;
  EvalReport report;
};
std::vector<MoirePoint> moire_scaling(const ModelConfig& cfg,
                                      const std::vector<PairSample>& all,
                                      const std::vector<int>& display_counts,
                                      std::uint64_t seed);

// matrix[train_group][test_group] = AUROC of the model trained with that
// group's displays and tested on the other group's displays (plus reals).
// Missing cells are flagged with n == 0, never fabricated.
struct TaxonomyMatrix {
  std::vector<std::string> groups;
  std::vector<std::vector<Metrics>> cells;  // row = train group, col = test group
};
TaxonomyMatrix confusion_by_taxonomy(const ModelConfig& cfg,
                                     const std::vector<PairSample>& all,
                                     const std::string& group_by);  // display_type|device_type

// Pooled dual-encoder features projected on their top-2 PCA axes.
struct FeatureRow {
  std::string sample_id;
  std::string label;
  std::string display_id;
  double u = 0.0;
  double v = 0.0;
  std::vector<double> full;  // full-dimensional feature for external tools
};
std::vector<FeatureRow> export_features_2d(RepNet& repnet,
                                           const std::vector<PairSample>& samples);

// Distinct display ids among display samples, sorted.
std::vector<std::string> display_ids_of(const std::vector<PairSample>& all);

}  // namespace mtof
