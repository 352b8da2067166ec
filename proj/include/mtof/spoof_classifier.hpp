#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mtof/nn.hpp"
#include "mtof/representation.hpp"

namespace mtof {

// Per-channel spatial means of both latent codes, multi-modal first.
// [N,c3,h,w] x2 -> [N, 2*c3].
Tensor pool_and_concat(const Tensor& z_m, const Tensor& z_t);

// Fully connected stack 2*c3 -> hidden -> 2 with ReLU in between.
class SpoofClassifier {
 public:
  SpoofClassifier(int c3, int hidden, std::uint64_t seed);

  // Softmax probabilities (p_real, p_display) per row.
  Tensor classify(const Tensor& features);

  nn::Sequential& mlp() { return mlp_; }
  std::vector<nn::Param*> params() { return mlp_.params(); }
  void set_train(bool train) { mlp_.set_train(train); }
  int input_dim() const { return in_dim_; }
  int hidden_dim() const { return hidden_; }

 private:
  int in_dim_, hidden_;
  nn::Sequential mlp_;
};

struct ClassifierTrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 20;
  std::uint64_t seed = 0;
  bool finetune = false;  // let gradients reach the encoders
};

struct ClassifierEpochLoss {
  int epoch = 0;
  double ce = 0.0;
  double accuracy = 0.0;
};

// Trains the classifier on pooled encoder features of all train pairs.
// Encoders stay frozen (bit-identical) unless cfg.finetune is set.
std::vector<ClassifierEpochLoss> train_classifier(RepNet& repnet, SpoofClassifier& clf,
                                                  const TrainingSet& set,
                                                  const ClassifierTrainConfig& cfg);

struct Prediction {
  Label label = Label::kReal;
  double p_display = 0.0;
  double p_real = 0.0;
};

// Inference path: encoders + pooling + classifier; generators are never
// invoked. Tie at p_display == 0.5 resolves to display.
Prediction predict_pair(const RgbImage& rgb, const ToFMap& tof, RepNet& repnet,
                        SpoofClassifier& clf);

// Pooled feature of one preprocessed pair (eval mode).
Tensor pooled_feature(const RgbImage& rgb, const ToFMap& tof, RepNet& repnet);

}  // namespace mtof
