#include "mtof/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mtof/rng.hpp"
#include "mtof/spectrum.hpp"

namespace mtof {

// ---------------------------------------------------------------------------
// Jacobi eigensolver
// ---------------------------------------------------------------------------

void jacobi_eigen_symmetric(std::vector<std::vector<double>> a,
                            std::vector<double>& eigenvalues,
                            std::vector<std::vector<double>>& eigenvectors) {
  std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a[i][i] > a[j][j]; });
  eigenvalues.resize(n);
  eigenvectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    eigenvalues[j] = a[order[j]][order[j]];
    for (std::size_t i = 0; i < n; ++i) eigenvectors[i][j] = v[i][order[j]];
  }
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

namespace {

void fix_sign(std::vector<double>& axis) {
  // Deterministic orientation: largest-magnitude component positive.
  std::size_t imax = 0;
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i]) > std::abs(axis[imax])) imax = i;
  if (axis[imax] < 0.0)
    for (auto& v : axis) v = -v;
}

}  // namespace

PcaModel pca_fit(const std::vector<std::vector<double>>& samples, int k) {
  std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 samples");
  std::size_t d = samples[0].size();

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (const auto& s : samples)
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += s[j];
  for (auto& m : model.mean) m /= static_cast<double>(n);

  // Gram matrix of centered samples; its top eigenvectors map to the
  // principal axes via Xc^T u / sqrt(lambda).
  std::vector<std::vector<double>> xc(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) xc[i][j] = samples[i][j] - model.mean[j];
  std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += xc[i][t] * xc[j][t];
      gram[i][j] = gram[j][i] = dot;
    }

  std::vector<double> evals;
  std::vector<std::vector<double>> evecs;
  jacobi_eigen_symmetric(gram, evals, evecs);

  double scale_ref = std::max(evals.empty() ? 0.0 : evals[0], 1e-300);
  for (int a = 0; a < k; ++a) {
    std::vector<double> axis(d, 0.0);
    bool degenerate = a >= static_cast<int>(n) || evals[a] < 1e-12 * scale_ref;
    if (!degenerate) {
      double inv = 1.0 / std::sqrt(evals[a]);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) axis[j] += xc[i][j] * evecs[i][a] * inv;
      model.explained_variance.push_back(evals[a] / static_cast<double>(n - 1));
    } else {
      // Deterministic orthonormal completion from the standard basis.
      for (std::size_t e = 0; e < d; ++e) {
        std::vector<double> cand(d, 0.0);
        cand[e] = 1.0;
        for (const auto& prev : model.axes) {
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += cand[j] * prev[j];
          for (std::size_t j = 0; j < d; ++j) cand[j] -= dot * prev[j];
        }
        double norm = 0.0;
        for (double vv : cand) norm += vv * vv;
        if (norm > 1e-6) {
          norm = std::sqrt(norm);
          for (std::size_t j = 0; j < d; ++j) axis[j] = cand[j] / norm;
          break;
        }
      }
      model.explained_variance.push_back(0.0);
    }
    fix_sign(axis);
    model.axes.push_back(std::move(axis));
  }
  return model;
}

std::vector<double> pca_project(const std::vector<double>& x, const PcaModel& model) {
  if (x.size() != model.mean.size())
    throw std::invalid_argument("pca_project: dimension mismatch");
  std::vector<double> out;
  for (const auto& axis : model.axes) {
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += (x[j] - model.mean[j]) * axis[j];
    out.push_back(dot);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear SVM
// ---------------------------------------------------------------------------

double LinearSvmModel::decision(const std::vector<double>& x) const {
  if (x.size() != weight.size())
    throw std::invalid_argument("svm decision: dimension mismatch");
  double acc = bias;
  for (std::size_t i = 0; i < x.size(); ++i) acc += weight[i] * x[i];
  return acc;
}

double LinearSvmModel::score(const std::vector<double>& x) const {
  return 1.0 / (1.0 + std::exp(-decision(x)));
}

double svm_objective(const LinearSvmModel& model,
                     const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, double reg) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i)
    hinge += std::max(0.0, 1.0 - labels[i] * model.decision(features[i]));
  hinge /= static_cast<double>(features.size());
  double w2 = 0.0;
  for (double w : model.weight) w2 += w * w;
  return hinge + reg * w2;
}

LinearSvmModel svm_train(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels, const SvmTrainConfig& cfg) {
  if (features.empty()) throw std::invalid_argument("svm_train: no data");
  bool pos = false, neg = false;
  for (int l : labels) {
    pos |= l > 0;
    neg |= l < 0;
  }
  if (!pos || !neg) throw std::invalid_argument("svm_train: both classes required");

  std::size_t d = features[0].size();
  std::size_t n = features.size();
  LinearSvmModel model;
  model.weight.assign(d, 0.0);
  double obj = svm_objective(model, features, labels, cfg.reg);
  double base_lr = cfg.lr;

  for (int t = 1; t <= cfg.epochs; ++t) {
    std::vector<double> gw(d, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double margin = labels[i] * model.decision(features[i]);
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) gw[j] -= labels[i] * features[i][j];
        gb -= labels[i];
      }
    }
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) gw[j] = gw[j] * inv_n + 2.0 * cfg.reg * model.weight[j];
    gb *= inv_n;

    double step = base_lr / std::sqrt(static_cast<double>(t));
    LinearSvmModel trial = model;
    for (std::size_t j = 0; j < d; ++j) trial.weight[j] -= step * gw[j];
    trial.bias -= step * gb;
    double trial_obj = svm_objective(trial, features, labels, cfg.reg);
    if (trial_obj <= obj) {
      model = std::move(trial);
      obj = trial_obj;
    } else {
      base_lr *= 0.5;  // rollback keeps the objective non-increasing
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Frequency baseline
// ---------------------------------------------------------------------------

namespace {

std::vector<double> freq_features(const PairSample& s, FreqModality modality) {
  SpectrumProfile p = modality == FreqModality::kToF
                          ? power_spectrum_1d(s.tof)
                          : power_spectrum_1d(to_grayscale(s.rgb));
  return p.values;
}

struct Standardizer {
  std::vector<double> mean, std;
};

Standardizer fit_standardizer(const std::vector<std::vector<double>>& feats) {
  std::size_t d = feats[0].size(), n = feats.size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  for (const auto& f : feats)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += f[j];
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (const auto& f : feats)
    for (std::size_t j = 0; j < d; ++j) {
      double dd = f[j] - s.mean[j];
      s.std[j] += dd * dd;
    }
  for (auto& v : s.std) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-9);
  return s;
}

// Trains on standardized features, then folds the affine map back into the
// weights so the stored model works on raw features.
LinearSvmModel svm_train_standardized(const std::vector<std::vector<double>>& feats,
                                      const std::vector<int>& labels,
                                      const SvmTrainConfig& cfg) {
  Standardizer st = fit_standardizer(feats);
  std::vector<std::vector<double>> z = feats;
  for (auto& f : z)
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = (f[j] - st.mean[j]) / st.std[j];
  LinearSvmModel m = svm_train(z, labels, cfg);
  LinearSvmModel folded;
  folded.weight.resize(m.weight.size());
  folded.bias = m.bias;
  for (std::size_t j = 0; j < m.weight.size(); ++j) {
    folded.weight[j] = m.weight[j] / st.std[j];
    folded.bias -= m.weight[j] * st.mean[j] / st.std[j];
  }
  return folded;
}

int pm_label(const PairSample& s) { return s.label == Label::kDisplay ? 1 : -1; }

}  // namespace

FreqSvmModel freq_detector_train(const std::vector<PairSample>& train,
                                 FreqModality modality, const SvmTrainConfig& cfg) {
  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  for (const auto& s : train) {
    feats.push_back(freq_features(s, modality));
    labels.push_back(pm_label(s));
  }
  FreqSvmModel model;
  model.modality = modality;
  model.svm = svm_train_standardized(feats, labels, cfg);
  return model;
}

double freq_detector_score(const FreqSvmModel& model, const PairSample& sample) {
  return model.svm.score(freq_features(sample, model.modality));
}

// ---------------------------------------------------------------------------
// PCA + SVM
// ---------------------------------------------------------------------------

namespace {

std::vector<double> downsampled_tof(const PairSample& s, int w, int h) {
  ToFMap m = resize_map(s.tof, w, h);
  return m.values;
}

}  // namespace

PcaSvmModel pca_svm_train(const std::vector<PairSample>& train, int down_w, int down_h,
                          const SvmTrainConfig& cfg) {
  PcaSvmModel model;
  model.down_w = down_w;
  model.down_h = down_h;
  std::vector<std::vector<double>> flat;
  std::vector<int> labels;
  for (const auto& s : train) {
    flat.push_back(downsampled_tof(s, down_w, down_h));
    labels.push_back(pm_label(s));
  }
  model.pca = pca_fit(flat, 2);
  std::vector<std::vector<double>> proj;
  for (const auto& f : flat) proj.push_back(pca_project(f, model.pca));
  model.svm = svm_train_standardized(proj, labels, cfg);
  return model;
}

double pca_svm_score(const PcaSvmModel& model, const PairSample& sample) {
  return model.svm.score(
      pca_project(downsampled_tof(sample, model.down_w, model.down_h), model.pca));
}

// ---------------------------------------------------------------------------
// Naive CNN
// ---------------------------------------------------------------------------

NaiveCnnModel::NaiveCnnModel(const NaiveCnnConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Rng rng(Rng::mix(seed, 0xc20));
  int widths[3] = {cfg.c1, cfg.c2, cfg.c3};
  int prev = cfg.in_channels;
  for (int i = 0; i < 3; ++i) {
    net_.add(std::make_unique<nn::Conv2d>(prev, widths[i], 3, 1, 1, rng,
                                          "cnn.conv" + std::to_string(i)));
    net_.add(std::make_unique<nn::ReLU>());
    net_.add(std::make_unique<nn::AvgPool2d>());
    prev = widths[i];
  }
  net_.add(std::make_unique<nn::GlobalAvgPool>());
  Rng rng2(Rng::mix(seed, 0xc2f));
  net_.add(std::make_unique<nn::Linear>(cfg.c3, 2, rng2, "cnn.fc"));
}

Tensor NaiveCnnModel::forward_probs(const Tensor& x) {
  return nn::softmax_rows(net_.forward(x));
}

Tensor naive_cnn_input(const PairSample& s, int in_channels) {
  Tensor rgb = to_tensor(s.rgb);
  if (in_channels == 3) return rgb;
  return concat_modalities(rgb, to_tensor(s.tof));
}

namespace {

// [1,C,H,W] augmentation primitives (deterministic via caller's rng).
Tensor flip_h(const Tensor& x) {
  Tensor y(x.shape());
  int c = x.dim(1), h = x.dim(2), w = x.dim(3);
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) y.at(0, ch, yy, xx) = x.at(0, ch, yy, w - 1 - xx);
  return y;
}

Tensor rot90(const Tensor& x) {
  int c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({1, c, w, h});
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) y.at(0, ch, xx, h - 1 - yy) = x.at(0, ch, yy, xx);
  return y;
}

Tensor crop(const Tensor& x, int size, int oy, int ox) {
  int c = x.dim(1);
  Tensor y({1, c, size, size});
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < size; ++yy)
      for (int xx = 0; xx < size; ++xx) y.at(0, ch, yy, xx) = x.at(0, ch, oy + yy, ox + xx);
  return y;
}

Tensor augment(const Tensor& x, int crop_size, Rng& rng) {
  Tensor cur = x;
  if (crop_size > 0 && (crop_size < cur.dim(2) || crop_size < cur.dim(3))) {
    int oy = static_cast<int>(rng.uniform_int(cur.dim(2) - crop_size + 1));
    int ox = static_cast<int>(rng.uniform_int(cur.dim(3) - crop_size + 1));
    cur = crop(cur, crop_size, oy, ox);
  }
  if (rng.uniform() < 0.5) cur = flip_h(cur);
  int quarter_turns = static_cast<int>(rng.uniform_int(4));
  for (int i = 0; i < quarter_turns; ++i) cur = rot90(cur);
  return cur;
}

}  // namespace

std::vector<NaiveCnnEpochLoss> naive_cnn_train(NaiveCnnModel& model,
                                               const std::vector<PairSample>& train,
                                               const NaiveCnnConfig& cfg) {
  bool has_real = false, has_display = false;
  for (const auto& s : train) {
    has_real |= s.label == Label::kReal;
    has_display |= s.label == Label::kDisplay;
  }
  if (!has_real || !has_display)
    throw std::invalid_argument("naive_cnn_train: both classes required");

  std::vector<Tensor> inputs;
  std::vector<int> labels;
  for (const auto& s : train) {
    inputs.push_back(naive_cnn_input(s, cfg.in_channels));
    labels.push_back(s.label == Label::kDisplay ? 1 : 0);
  }

  model.set_train(true);
  nn::Adam opt(model.params(), cfg.learning_rate);

  // Balance the classes by cycling through the minority class again;
  // otherwise skewed sets push the net into predicting the prior.
  std::vector<std::size_t> real_idx, display_idx;
  for (std::size_t i = 0; i < train.size(); ++i)
    (labels[i] == 1 ? display_idx : real_idx).push_back(i);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& minority = real_idx.size() < display_idx.size() ? real_idx : display_idx;
  const auto& majority = real_idx.size() < display_idx.size() ? display_idx : real_idx;
  for (std::size_t i = minority.size(); i < majority.size(); ++i)
    order.push_back(minority[i % minority.size()]);
  std::vector<NaiveCnnEpochLoss> log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(Rng::mix(cfg.seed, 0xaa0 + epoch));
    rng.shuffle(order);
    NaiveCnnEpochLoss el;
    el.epoch = epoch;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Tensor> rows;
      std::vector<int> batch_labels;
      for (std::size_t k = start; k < end; ++k) {
        std::size_t i = order[k];
        rows.push_back(cfg.augment ? augment(inputs[i], cfg.crop, rng) : inputs[i]);
        batch_labels.push_back(labels[i]);
      }
      Tensor x = stack_batch(rows);
      opt.zero_grad();
      Tensor logits = model.net().forward(x);
      nn::CeResult ce = nn::softmax_cross_entropy(logits, batch_labels);
      model.net().backward(ce.grad);
      opt.step();
      el.ce += ce.value;
      ++n_batches;
    }
    if (n_batches > 0) el.ce /= n_batches;
    log.push_back(el);
  }
  model.set_train(false);
  return log;
}

double naive_cnn_score(NaiveCnnModel& model, const PairSample& sample) {
  model.set_train(false);
  Tensor probs = model.forward_probs(naive_cnn_input(sample, model.config().in_channels));
  return probs.at(0, 1);
}

}  // namespace mtof
