#include "mtof/representation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mtof {

using nn::Param;

Tensor to_tensor(const RgbImage& img) {
  Tensor t({1, 3, img.height, img.width});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) t.at(0, c, y, x) = img.at(y, x, c);
  return t;
}

Tensor to_tensor(const ToFMap& map) {
  Tensor t({1, 1, map.height, map.width});
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) t.at(0, 0, y, x) = map.at(y, x);
  return t;
}

Tensor stack_batch(const std::vector<Tensor>& items) {
  if (items.empty()) return Tensor();
  auto shape = items[0].shape();
  shape[0] = static_cast<int>(items.size());
  Tensor out(shape);
  std::size_t per = items[0].numel();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].numel() != per) throw std::invalid_argument("stack_batch: shape mismatch");
    std::copy(items[i].data(), items[i].data() + per, out.data() + i * per);
  }
  return out;
}

Tensor concat_modalities(const Tensor& rgb, const Tensor& tof) {
  if (rgb.ndim() != 4 || tof.ndim() != 4 || rgb.dim(1) != 3 || tof.dim(1) != 1)
    throw std::invalid_argument("concat_modalities: expected [N,3,H,W] and [N,1,H,W]");
  if (rgb.dim(0) != tof.dim(0) || rgb.dim(2) != tof.dim(2) || rgb.dim(3) != tof.dim(3))
    throw std::invalid_argument("concat_modalities: spatial size mismatch");
  int n = rgb.dim(0), h = rgb.dim(2), w = rgb.dim(3);
  Tensor out({n, 4, h, w});
  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(b, c, y, x) = rgb.at(b, c, y, x);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(b, 3, y, x) = tof.at(b, 0, y, x);
  }
  return out;
}

namespace {

void build_encoder(nn::Sequential& seq, int in_c, const RepNetConfig& cfg, Rng& rng,
                   const std::string& name) {
  int widths[3] = {cfg.c1, cfg.c2, cfg.c3};
  int prev = in_c;
  for (int i = 0; i < 3; ++i) {
    std::string stage = name + ".conv" + std::to_string(i);
    seq.add(std::make_unique<nn::Conv2d>(prev, widths[i], 3, 2, 1, rng, stage));
    seq.add(std::make_unique<nn::ReLU>());
    seq.add(std::make_unique<nn::BatchNorm2d>(widths[i], name + ".bn" + std::to_string(i)));
    prev = widths[i];
  }
}

void build_generator(nn::Sequential& seq, const RepNetConfig& cfg, Rng& rng,
                     const std::string& name) {
  int widths[4] = {cfg.c3, cfg.c2, cfg.c1, 1};
  for (int i = 0; i < 3; ++i) {
    std::string stage = name + ".tconv" + std::to_string(i);
    seq.add(std::make_unique<nn::ConvTranspose2d>(widths[i], widths[i + 1], 2, 2, rng, stage));
    if (i < 2) seq.add(std::make_unique<nn::ReLU>());
  }
}

void check_divisible(const Tensor& x, int channels, const char* who) {
  if (x.ndim() != 4 || x.dim(1) != channels)
    throw std::invalid_argument(std::string(who) + ": wrong channel count");
  if (x.dim(2) % 8 != 0 || x.dim(3) % 8 != 0)
    throw std::invalid_argument(std::string(who) + ": spatial dims must be divisible by 8");
}

}  // namespace

RepNet::RepNet(const RepNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Rng rng(Rng::mix(seed, 0x4e57));
  build_encoder(enc_m_, 4, cfg, rng, "enc_m");
  build_generator(gen_m_, cfg, rng, "gen_m");
  build_encoder(enc_t_, 1, cfg, rng, "enc_t");
  build_generator(gen_t_, cfg, rng, "gen_t");
}

Tensor RepNet::encode_multimodal(const Tensor& x4) {
  check_divisible(x4, 4, "encode_multimodal");
  return enc_m_.forward(x4);
}

Tensor RepNet::encode_tof(const Tensor& x_t) {
  check_divisible(x_t, 1, "encode_tof");
  return enc_t_.forward(x_t);
}

Tensor RepNet::generate_tof_m(const Tensor& z) {
  ++gen_m_calls_;
  return gen_m_.forward(z);
}

Tensor RepNet::generate_tof_t(const Tensor& z) {
  ++gen_t_calls_;
  return gen_t_.forward(z);
}

void RepNet::set_train(bool train) {
  enc_m_.set_train(train);
  gen_m_.set_train(train);
  enc_t_.set_train(train);
  gen_t_.set_train(train);
}

std::vector<Param*> RepNet::params() {
  return nn::collect_params({&enc_m_, &gen_m_, &enc_t_, &gen_t_});
}
std::vector<Param*> RepNet::params_multimodal() {
  return nn::collect_params({&enc_m_, &gen_m_});
}
std::vector<Param*> RepNet::params_tof() {
  return nn::collect_params({&enc_t_, &gen_t_});
}
std::vector<Param*> RepNet::encoder_params() {
  return nn::collect_params({&enc_m_, &enc_t_});
}

std::vector<Tensor*> RepNet::buffers() {
  std::vector<Tensor*> out;
  for (nn::Sequential* seq : {&enc_m_, &enc_t_}) {
    for (std::size_t i = 0; i < seq->size(); ++i) {
      if (auto* bn = dynamic_cast<nn::BatchNorm2d*>(&seq->layer(i))) {
        out.push_back(&bn->running_mean());
        out.push_back(&bn->running_var());
      }
    }
  }
  return out;
}

std::vector<std::string> RepNet::buffer_names() const {
  std::vector<std::string> out;
  for (const char* enc : {"enc_m", "enc_t"})
    for (int i = 0; i < 3; ++i) {
      out.push_back(std::string(enc) + ".bn" + std::to_string(i) + ".running_mean");
      out.push_back(std::string(enc) + ".bn" + std::to_string(i) + ".running_var");
    }
  return out;
}

RepBatch make_rep_batch(const TrainingSet& set, const std::vector<std::size_t>& indices) {
  RepBatch batch;
  batch.batch_size = static_cast<int>(indices.size());
  std::vector<Tensor> tofs;
  std::vector<Tensor> rgbs;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::size_t i = indices[k];
    tofs.push_back(to_tensor(set.tof(i)));
    if (set.samples[i].label == Label::kReal) {
      batch.real_rows.push_back(static_cast<int>(k));
      rgbs.push_back(to_tensor(set.rgb(i)));
    }
  }
  batch.tof = stack_batch(tofs);
  if (!rgbs.empty()) batch.rgb_real = stack_batch(rgbs);
  return batch;
}

namespace {

Tensor gather_rows(const Tensor& t, const std::vector<int>& rows) {
  auto shape = t.shape();
  shape[0] = static_cast<int>(rows.size());
  Tensor out(shape);
  std::size_t per = t.numel() / t.dim(0);
  for (std::size_t k = 0; k < rows.size(); ++k)
    std::copy(t.data() + rows[k] * per, t.data() + (rows[k] + 1) * per,
              out.data() + k * per);
  return out;
}

void scatter_add_rows(Tensor& dst, const Tensor& src, const std::vector<int>& rows) {
  std::size_t per = dst.numel() / dst.dim(0);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t j = 0; j < per; ++j) dst[rows[k] * per + j] += src[k * per + j];
}

void scale(Tensor& t, double s) {
  for (auto& v : t.vec()) v *= s;
}

}  // namespace

LossBreakdown rep_losses(RepNet& net, const RepBatch& batch, double w_m, double w_t,
                         double w_rep, bool backward) {
  LossBreakdown out;

  // ToF-modal path over the whole batch.
  Tensor z_t = net.encode_tof(batch.tof);
  Tensor rec_t = net.gen_t().forward(z_t);
  nn::LossResult mse_t = nn::mse_loss(rec_t, batch.tof);
  out.rec_t = mse_t.value;

  bool have_real = !batch.real_rows.empty();
  Tensor z_m, tof_real;
  nn::LossResult mse_m;
  nn::L1Result l1;
  if (have_real) {
    tof_real = gather_rows(batch.tof, batch.real_rows);
    Tensor x4 = concat_modalities(batch.rgb_real, tof_real);
    z_m = net.encode_multimodal(x4);
    Tensor rec_m = net.gen_m().forward(z_m);
    mse_m = nn::mse_loss(rec_m, tof_real);
    out.rec_m = mse_m.value;
    Tensor z_t_real = gather_rows(z_t, batch.real_rows);
    l1 = nn::l1_loss(z_m, z_t_real);
    out.rep = l1.value;
  }
  out.total = w_m * out.rec_m + w_t * out.rec_t + w_rep * out.rep;

  if (backward) {
    // Multi-modal chain: generator reconstruction plus the latent alignment.
    if (have_real) {
      scale(mse_m.grad, w_m);
      Tensor gz_m = net.gen_m().backward(mse_m.grad);
      scale(l1.grad_a, w_rep);
      for (std::size_t i = 0; i < gz_m.numel(); ++i) gz_m[i] += l1.grad_a[i];
      net.enc_m().backward(gz_m);
    }
    // ToF-modal chain: reconstruction on all rows, alignment on real rows.
    scale(mse_t.grad, w_t);
    Tensor gz_t = net.gen_t().backward(mse_t.grad);
    if (have_real) {
      scale(l1.grad_b, w_rep);
      scatter_add_rows(gz_t, l1.grad_b, batch.real_rows);
    }
    net.enc_t().backward(gz_t);
  }
  return out;
}

double rec_loss_multimodal(RepNet& net, const std::vector<PairSample>& real_pairs) {
  if (real_pairs.empty()) throw std::invalid_argument("rec_loss_multimodal: empty batch");
  std::vector<Tensor> rgbs, tofs;
  for (const auto& s : real_pairs) {
    if (s.label != Label::kReal)
      throw std::invalid_argument("rec_loss_multimodal: display sample in real-only batch");
    rgbs.push_back(to_tensor(s.rgb));
    tofs.push_back(to_tensor(s.tof));
  }
  Tensor tof = stack_batch(tofs);
  Tensor x4 = concat_modalities(stack_batch(rgbs), tof);
  Tensor rec = net.generate_tof_m(net.encode_multimodal(x4));
  return nn::mse_loss(rec, tof).value;
}

double rec_loss_tof(RepNet& net, const std::vector<PairSample>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("rec_loss_tof: empty batch");
  std::vector<Tensor> tofs;
  for (const auto& s : pairs) tofs.push_back(to_tensor(s.tof));
  Tensor tof = stack_batch(tofs);
  Tensor rec = net.generate_tof_t(net.encode_tof(tof));
  return nn::mse_loss(rec, tof).value;
}

double rep_loss(const Tensor& z_m, const Tensor& z_t) {
  return nn::l1_loss(z_m, z_t).value;
}

namespace {

std::vector<EpochLoss> run_epochs(RepNet& net, const TrainingSet& set,
                                  const TrainConfig& cfg,
                                  const std::vector<std::size_t>& pool,
                                  std::vector<Param*> trainable, double w_m, double w_t,
                                  double w_rep, int epoch_offset) {
  nn::Adam opt(trainable, cfg.learning_rate);
  std::vector<EpochLoss> log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = pool;
    Rng rng(Rng::mix(cfg.seed, 0xe90c + epoch + epoch_offset));
    rng.shuffle(order);
    EpochLoss el;
    el.epoch = epoch + epoch_offset;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
      RepBatch batch = make_rep_batch(set, idx);
      opt.zero_grad();
      LossBreakdown lb = rep_losses(net, batch, w_m, w_t, w_rep, true);
      opt.step();
      el.rec_m += lb.rec_m;
      el.rec_t += lb.rec_t;
      el.rep += lb.rep;
      el.total += lb.total;
      ++n_batches;
    }
    if (n_batches > 0) {
      el.rec_m /= n_batches;
      el.rec_t /= n_batches;
      el.rep /= n_batches;
      el.total /= n_batches;
    }
    log.push_back(el);
  }
  return log;
}

}  // namespace

std::vector<EpochLoss> train_representation(RepNet& net, const TrainingSet& set,
                                            const TrainConfig& cfg) {
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> reals;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set.samples[i].label == Label::kReal) reals.push_back(i);
  if (reals.empty())
    throw std::invalid_argument("train_representation: no real samples in train set");

  net.set_train(true);
  std::vector<EpochLoss> log;
  if (cfg.staged) {
    // Sequential reading: first the multi-modal model on real pairs, then the
    // ToF-modal model pulled toward the frozen multi-modal latents.
    log = run_epochs(net, set, cfg, reals, net.params_multimodal(), cfg.lambda_rec_m,
                     0.0, 0.0, 0);
    auto stage2 = run_epochs(net, set, cfg, all, net.params_tof(), 0.0,
                             cfg.lambda_rec_t, cfg.lambda_rep, cfg.epochs);
    log.insert(log.end(), stage2.begin(), stage2.end());
  } else {
    log = run_epochs(net, set, cfg, all, net.params(), cfg.lambda_rec_m,
                     cfg.lambda_rec_t, cfg.lambda_rep, 0);
  }
  net.set_train(false);
  return log;
}

void write_loss_log_csv(const std::string& path, const std::vector<EpochLoss>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss log: " + path);
  out << "epoch,L_recM,L_recT,L_rep,total\n";
  out.precision(17);
  for (const auto& e : log)
    out << e.epoch << "," << e.rec_m << "," << e.rec_t << "," << e.rep << "," << e.total
        << "\n";
}

}  // namespace mtof
