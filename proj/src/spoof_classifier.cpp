#include "mtof/spoof_classifier.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mtof {

Tensor pool_and_concat(const Tensor& z_m, const Tensor& z_t) {
  if (!z_m.same_shape(z_t))
    throw std::invalid_argument("pool_and_concat: latent shape mismatch");
  if (z_m.ndim() != 4) throw std::invalid_argument("pool_and_concat: expected NCHW");
  int n = z_m.dim(0), c = z_m.dim(1), h = z_m.dim(2), w = z_m.dim(3);
  double inv = 1.0 / (static_cast<double>(h) * w);
  Tensor out({n, 2 * c});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      double sm = 0.0, st = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          sm += z_m.at(b, ch, y, x);
          st += z_t.at(b, ch, y, x);
        }
      out.at(b, ch) = sm * inv;
      out.at(b, c + ch) = st * inv;
    }
  return out;
}

SpoofClassifier::SpoofClassifier(int c3, int hidden, std::uint64_t seed)
    : in_dim_(2 * c3), hidden_(hidden) {
  Rng rng(Rng::mix(seed, 0xc1f5));
  mlp_.add(std::make_unique<nn::Linear>(in_dim_, hidden, rng, "clf.fc1"));
  mlp_.add(std::make_unique<nn::ReLU>());
  mlp_.add(std::make_unique<nn::Linear>(hidden, 2, rng, "clf.fc2"));
}

Tensor SpoofClassifier::classify(const Tensor& features) {
  if (features.ndim() != 2 || features.dim(1) != in_dim_)
    throw std::invalid_argument("classify: feature length mismatch");
  return nn::softmax_rows(mlp_.forward(features));
}

namespace {

// Label index convention: 0 = real, 1 = display.
int label_index(Label l) { return l == Label::kReal ? 0 : 1; }

}  // namespace

std::vector<ClassifierEpochLoss> train_classifier(RepNet& repnet, SpoofClassifier& clf,
                                                  const TrainingSet& set,
                                                  const ClassifierTrainConfig& cfg) {
  bool has_real = false, has_display = false;
  for (const auto& s : set.samples) {
    has_real |= s.label == Label::kReal;
    has_display |= s.label == Label::kDisplay;
  }
  if (!has_real || !has_display)
    throw std::invalid_argument("train_classifier: training split needs both classes");

  // Frozen path: features are a pure function of the inputs, so compute them
  // once in eval mode and train the MLP on the cached vectors.
  repnet.set_train(false);
  std::vector<Tensor> features(set.size());
  std::vector<int> labels(set.size());
  if (!cfg.finetune) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      Tensor tof = to_tensor(set.tof(i));
      Tensor x4 = concat_modalities(to_tensor(set.rgb(i)), tof);
      features[i] = pool_and_concat(repnet.encode_multimodal(x4), repnet.encode_tof(tof));
      labels[i] = label_index(set.samples[i].label);
    }
  }

  nn::Adam opt(cfg.finetune
                   ? nn::collect_params({&repnet.enc_m(), &repnet.enc_t(), &clf.mlp()})
                   : clf.params(),
               cfg.learning_rate);
  clf.set_train(true);
  if (cfg.finetune) repnet.set_train(true);

  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<ClassifierEpochLoss> log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(Rng::mix(cfg.seed, 0xc1a55 + epoch));
    rng.shuffle(order);
    ClassifierEpochLoss el;
    el.epoch = epoch;
    int n_batches = 0;
    std::size_t n_correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);

      Tensor feat;
      std::vector<int> batch_labels;
      Tensor z_m, z_t;
      if (cfg.finetune) {
        std::vector<Tensor> rgbs, tofs;
        for (auto i : idx) {
          rgbs.push_back(to_tensor(set.rgb(i)));
          tofs.push_back(to_tensor(set.tof(i)));
          batch_labels.push_back(label_index(set.samples[i].label));
        }
        Tensor tof = stack_batch(tofs);
        z_m = repnet.encode_multimodal(concat_modalities(stack_batch(rgbs), tof));
        z_t = repnet.encode_tof(tof);
        feat = pool_and_concat(z_m, z_t);
      } else {
        std::vector<Tensor> rows;
        for (auto i : idx) {
          rows.push_back(features[i]);
          batch_labels.push_back(labels[i]);
        }
        feat = stack_batch(rows);
      }

      opt.zero_grad();
      Tensor logits = clf.mlp().forward(feat);
      nn::CeResult ce = nn::softmax_cross_entropy(logits, batch_labels);
      Tensor gfeat = clf.mlp().backward(ce.grad);
      if (cfg.finetune) {
        // Split pooled-feature gradient back through both encoders.
        int c = z_m.dim(1), h = z_m.dim(2), w = z_m.dim(3);
        double inv = 1.0 / (static_cast<double>(h) * w);
        Tensor gz_m(z_m.shape()), gz_t(z_t.shape());
        for (int b = 0; b < gfeat.dim(0); ++b)
          for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
              for (int x = 0; x < w; ++x) {
                gz_m.at(b, ch, y, x) = gfeat.at(b, ch) * inv;
                gz_t.at(b, ch, y, x) = gfeat.at(b, c + ch) * inv;
              }
        repnet.enc_m().backward(gz_m);
        repnet.enc_t().backward(gz_t);
      }
      opt.step();

      el.ce += ce.value;
      ++n_batches;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        int pred = ce.probs.at(static_cast<int>(k), 1) >= 0.5 ? 1 : 0;
        if (pred == batch_labels[k]) ++n_correct;
      }
    }
    if (n_batches > 0) el.ce /= n_batches;
    el.accuracy = static_cast<double>(n_correct) / static_cast<double>(set.size());
    log.push_back(el);
  }
  clf.set_train(false);
  repnet.set_train(false);
  return log;
}

Tensor pooled_feature(const RgbImage& rgb, const ToFMap& tof, RepNet& repnet) {
  repnet.set_train(false);
  Tensor tof_t = to_tensor(tof);
  Tensor x4 = concat_modalities(to_tensor(rgb), tof_t);
  return pool_and_concat(repnet.encode_multimodal(x4), repnet.encode_tof(tof_t));
}

Prediction predict_pair(const RgbImage& rgb, const ToFMap& tof, RepNet& repnet,
                        SpoofClassifier& clf) {
  clf.set_train(false);
  Tensor probs = clf.classify(pooled_feature(rgb, tof, repnet));
  Prediction p;
  p.p_real = probs.at(0, 0);
  p.p_display = probs.at(0, 1);
  // Ties resolve to display (fail-safe).
  p.label = p.p_display >= 0.5 ? Label::kDisplay : Label::kReal;
  return p;
}

}  // namespace mtof
