#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtof/data_model.hpp"
#include "mtof/nn.hpp"
#include "mtof/representation.hpp"

namespace mtof {

// ---------------------------------------------------------------------------
// PCA (top-2 components)
// ---------------------------------------------------------------------------

struct PcaModel {
  std::vector<double> mean;                  // length d
  std::vector<std::vector<double>> axes;     // 2 orthonormal axes, length d each
  std::vector<double> explained_variance;    // descending
};

// Top-2 principal axes via the Gram-matrix route (sample count is small,
// feature dimension is not). Deterministic: Jacobi eigensolver plus a fixed
// sign convention.
PcaModel pca_fit(const std::vector<std::vector<double>>& samples, int k = 2);

std::vector<double> pca_project(const std::vector<double>& x, const PcaModel& model);

// Symmetric eigendecomposition by cyclic Jacobi; returns eigenvalues
// descending with matching eigenvectors (columns). Exposed for tests.
void jacobi_eigen_symmetric(std::vector<std::vector<double>> a,
                            std::vector<double>& eigenvalues,
                            std::vector<std::vector<double>>& eigenvectors);

// ---------------------------------------------------------------------------
// Linear SVM (primal hinge + L2, deterministic subgradient descent)
// ---------------------------------------------------------------------------

struct LinearSvmModel {
  std::vector<double> weight;
  double bias = 0.0;

  double decision(const std::vector<double>& x) const;
  // Monotone map of the margin to a [0,1] display score.
  double score(const std::vector<double>& x) const;
};

struct SvmTrainConfig {
  int epochs = 200;
  double lr = 1e-2;        // step at epoch t is lr / sqrt(t)
  double reg = 1e-3;       // L2 coefficient on ||w||^2
};

// Labels in {-1,+1}. Full-batch subgradient descent; a step that would
// increase the objective is rolled back with a halved rate, so the objective
// is non-increasing over epochs.
LinearSvmModel svm_train(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels,
                         const SvmTrainConfig& cfg = {});

double svm_objective(const LinearSvmModel& model,
                     const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, double reg);

// ---------------------------------------------------------------------------
// Frequency baseline: power_spectrum_1d -> linear SVM
// ---------------------------------------------------------------------------

enum class FreqModality { kImage, kToF };

struct FreqSvmModel {
  FreqModality modality = FreqModality::kToF;
  LinearSvmModel svm;
};

FreqSvmModel freq_detector_train(const std::vector<PairSample>& train,
                                 FreqModality modality,
                                 const SvmTrainConfig& cfg = {});

double freq_detector_score(const FreqSvmModel& model, const PairSample& sample);

// ---------------------------------------------------------------------------
// PCA + SVM baseline on (downsampled) ToF maps
// ---------------------------------------------------------------------------

struct PcaSvmModel {
  int down_w = 45;
  int down_h = 60;
  PcaModel pca;
  LinearSvmModel svm;
};

PcaSvmModel pca_svm_train(const std::vector<PairSample>& train, int down_w = 45,
                          int down_h = 60, const SvmTrainConfig& cfg = {});

double pca_svm_score(const PcaSvmModel& model, const PairSample& sample);

// ---------------------------------------------------------------------------
// Naive CNN on concatenated input (the moiré learner)
// ---------------------------------------------------------------------------

struct NaiveCnnConfig {
  int in_channels = 4;  // 4 = RGB+ToF, 3 = image only
  int c1 = 8, c2 = 16, c3 = 32;
  double learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 20;
  std::uint64_t seed = 0;
  bool augment = false;  // random crop/flip/rotation during training
  int crop = 0;          // crop size when augmenting (0 = no crop)
};

class NaiveCnnModel {
 public:
  NaiveCnnModel(const NaiveCnnConfig& cfg, std::uint64_t seed);
  Tensor forward_probs(const Tensor& x);  // [N,C,H,W] -> softmax [N,2]
  nn::Sequential& net() { return net_; }
  std::vector<nn::Param*> params() { return net_.params(); }
  void set_train(bool t) { net_.set_train(t); }
  const NaiveCnnConfig& config() const { return cfg_; }

 private:
  NaiveCnnConfig cfg_;
  nn::Sequential net_;
};

// Builds the input block for the naive CNN (3 or 4 channels).
Tensor naive_cnn_input(const PairSample& s, int in_channels);

struct NaiveCnnEpochLoss {
  int epoch = 0;
  double ce = 0.0;
};

std::vector<NaiveCnnEpochLoss> naive_cnn_train(NaiveCnnModel& model,
                                               const std::vector<PairSample>& train,
                                               const NaiveCnnConfig& cfg);

double naive_cnn_score(NaiveCnnModel& model, const PairSample& sample);

}  // namespace mtof
