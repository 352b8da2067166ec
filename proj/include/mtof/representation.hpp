#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtof/data_model.hpp"
#include "mtof/nn.hpp"
#include "mtof/tensor.hpp"

namespace mtof {

// Channel widths of the three encoder stages; generators mirror them.
struct RepNetConfig {
  int c1 = 32;
  int c2 = 64;
  int c3 = 128;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 20;
  double lambda_rec_m = 1.0;
  double lambda_rec_t = 1.0;
  double lambda_rep = 1.0;
  std::uint64_t seed = 0;
  bool staged = false;  // sequential two-phase training instead of joint
};

// Tensor conversions. Images become [1,C,H,W] blocks.
Tensor to_tensor(const RgbImage& img);
Tensor to_tensor(const ToFMap& map);

// Stacks per-sample tensors along the batch axis.
Tensor stack_batch(const std::vector<Tensor>& items);

// [N,3,H,W] + [N,1,H,W] -> [N,4,H,W], channel order R,G,B,ToF.
Tensor concat_modalities(const Tensor& rgb, const Tensor& tof);

// Dual embedding model: multi-modal (RGB+ToF -> ToF) and ToF-modal
// (ToF -> ToF). Encoders: three stride-2 k3 convolutions, each followed by
// ReLU then batch norm. Generators: three stride-2 k2 transposed
// convolutions, no skip connections.
class RepNet {
 public:
  RepNet(const RepNetConfig& cfg, std::uint64_t seed);

  Tensor encode_multimodal(const Tensor& x4);  // [N,4,H,W] -> [N,c3,H/8,W/8]
  Tensor encode_tof(const Tensor& x_t);        // [N,1,H,W] -> [N,c3,H/8,W/8]
  Tensor generate_tof_m(const Tensor& z);      // latent -> [N,1,H,W]
  Tensor generate_tof_t(const Tensor& z);

  nn::Sequential& enc_m() { return enc_m_; }
  nn::Sequential& gen_m() { return gen_m_; }
  nn::Sequential& enc_t() { return enc_t_; }
  nn::Sequential& gen_t() { return gen_t_; }

  void set_train(bool train);
  std::vector<nn::Param*> params();
  std::vector<nn::Param*> params_multimodal();  // E_M + G_M
  std::vector<nn::Param*> params_tof();         // E_T + G_T
  std::vector<nn::Param*> encoder_params();     // E_M + E_T only

  const RepNetConfig& config() const { return cfg_; }

  // Instrumentation: generator invocations (must stay flat at inference).
  long gen_m_calls() const { return gen_m_calls_; }
  long gen_t_calls() const { return gen_t_calls_; }

  // Batch-norm running statistics, needed for bit-exact checkpointing.
  std::vector<Tensor*> buffers();
  std::vector<std::string> buffer_names() const;

 private:
  RepNetConfig cfg_;
  nn::Sequential enc_m_, gen_m_, enc_t_, gen_t_;
  long gen_m_calls_ = 0;
  long gen_t_calls_ = 0;
};

// In-memory training set with instrumented RGB access: representation
// training must never touch the RGB channels of display pairs.
struct TrainingSet {
  std::vector<PairSample> samples;
  mutable long display_rgb_reads = 0;

  const RgbImage& rgb(std::size_t i) const {
    if (samples[i].label == Label::kDisplay) ++display_rgb_reads;
    return samples[i].rgb;
  }
  const ToFMap& tof(std::size_t i) const { return samples[i].tof; }
  std::size_t size() const { return samples.size(); }
};

// One training batch already materialized as tensors. `real_rows` indexes
// the real samples inside the batch; rgb holds only those rows.
struct RepBatch {
  Tensor tof;              // [N,1,H,W], all samples
  Tensor rgb_real;         // [Nr,3,H,W], real samples only (empty if none)
  std::vector<int> real_rows;
  int batch_size = 0;
};

RepBatch make_rep_batch(const TrainingSet& set, const std::vector<std::size_t>& indices);

struct LossBreakdown {
  double rec_m = 0.0;
  double rec_t = 0.0;
  double rep = 0.0;
  double total = 0.0;
};

// Forward (and optionally backward) pass of the joint objective
// w_m*L_rec^M + w_t*L_rec^T + w_rep*L_rep on one batch. L_rec^M and L_rep
// cover only the real rows; L_rec^T covers every row. Gradients accumulate
// into the layer params when backward=true.
LossBreakdown rep_losses(RepNet& net, const RepBatch& batch, double w_m, double w_t,
                         double w_rep, bool backward);

// Standalone loss operations (evaluation-style contracts).
double rec_loss_multimodal(RepNet& net, const std::vector<PairSample>& real_pairs);
double rec_loss_tof(RepNet& net, const std::vector<PairSample>& pairs);
double rep_loss(const Tensor& z_m, const Tensor& z_t);

struct EpochLoss {
  int epoch = 0;
  double rec_m = 0.0;
  double rec_t = 0.0;
  double rep = 0.0;
  double total = 0.0;
};

// Adam training of the full representation network; returns the per-epoch
// loss log. Throws if the train set holds no real sample.
std::vector<EpochLoss> train_representation(RepNet& net, const TrainingSet& set,
                                            const TrainConfig& cfg);

void write_loss_log_csv(const std::string& path, const std::vector<EpochLoss>& log);

}  // namespace mtof
