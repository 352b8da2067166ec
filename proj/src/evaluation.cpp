#include "mtof/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace mtof {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double accuracy(const std::vector<ScoredSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t correct = 0;
  for (const auto& s : samples)
    if (s.predicted_label == s.true_label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

double auroc(const std::vector<ScoredSample>& samples) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : samples) (s.true_label == Label::kDisplay ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auroc: need both classes");

  // Average ranks handle ties exactly (each tied pos-neg pair counts 1/2).
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score < samples[b].score;
  });
  std::vector<double> rank(samples.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           samples[order[j + 1]].score == samples[order[i]].score)
      ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k)
    if (samples[k].true_label == Label::kDisplay) rank_sum_pos += rank[k];
  double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(const std::vector<ScoredSample>& samples) {
  std::size_t n_pos = 0;
  for (const auto& s : samples)
    if (s.true_label == Label::kDisplay) ++n_pos;
  if (n_pos == 0) throw std::invalid_argument("average_precision: no positives");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].score != samples[b].score) return samples[a].score > samples[b].score;
    return samples[a].sample_id < samples[b].sample_id;
  });
  double sum = 0.0;
  std::size_t tp = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (samples[order[r]].true_label == Label::kDisplay) {
      ++tp;
      sum += static_cast<double>(tp) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(n_pos);
}

Metrics compute_metrics(const std::vector<ScoredSample>& samples) {
  Metrics m;
  m.n = static_cast<int>(samples.size());
  m.acc = accuracy(samples);
  m.auroc = auroc(samples);
  m.ap = average_precision(samples);
  return m;
}

// ---------------------------------------------------------------------------
// Detector training dispatch
// ---------------------------------------------------------------------------

TrainedDetector train_detector(const ModelConfig& cfg,
                               const std::vector<PairSample>& train) {
  TrainedDetector det;
  const std::string& name = cfg.name;

  if (name == "mtofnet" || name == "mtofnet_norep") {
    TrainConfig rep_cfg = cfg.rep_train;
    rep_cfg.seed = cfg.seed;
    if (name == "mtofnet_norep") rep_cfg.lambda_rep = 0.0;
    auto repnet = std::make_shared<RepNet>(cfg.rep, cfg.seed);
    TrainingSet set;
    set.samples = train;
    train_representation(*repnet, set, rep_cfg);
    auto clf = std::make_shared<SpoofClassifier>(cfg.rep.c3, cfg.clf_hidden, cfg.seed);
    ClassifierTrainConfig clf_cfg = cfg.clf_train;
    clf_cfg.seed = cfg.seed;
    train_classifier(*repnet, *clf, set, clf_cfg);
    det.repnet = repnet;
    det.classifier = clf;
    det.score = [repnet, clf](const PairSample& s) {
      return predict_pair(s.rgb, s.tof, *repnet, *clf).p_display;
    };
  } else if (name == "naive_cnn" || name == "image_cnn") {
    NaiveCnnConfig cnn_cfg = cfg.cnn;
    cnn_cfg.seed = cfg.seed;
    cnn_cfg.in_channels = name == "image_cnn" ? 3 : 4;
    auto model = std::make_shared<NaiveCnnModel>(cnn_cfg, cfg.seed);
    naive_cnn_train(*model, train, cnn_cfg);
    det.score = [model](const PairSample& s) { return naive_cnn_score(*model, s); };
  } else if (name == "pca_svm") {
    auto model = std::make_shared<PcaSvmModel>(pca_svm_train(train, 45, 60, cfg.svm));
    det.score = [model](const PairSample& s) { return pca_svm_score(*model, s); };
  } else if (name == "freq_svm_tof" || name == "freq_svm_image") {
    FreqModality mod =
        name == "freq_svm_image" ? FreqModality::kImage : FreqModality::kToF;
    auto model = std::make_shared<FreqSvmModel>(freq_detector_train(train, mod, cfg.svm));
    det.score = [model](const PairSample& s) { return freq_detector_score(*model, s); };
  } else {
    throw std::invalid_argument("unknown model name: " + name);
  }
  return det;
}

std::vector<ScoredSample> score_samples(const TrainedDetector& det,
                                        const std::vector<PairSample>& test) {
  std::vector<ScoredSample> out;
  for (const auto& s : test) {
    ScoredSample ss;
    ss.sample_id = s.sample_id;
    ss.true_label = s.label;
    ss.score = det.score(s);
    ss.predicted_label = ss.score >= 0.5 ? Label::kDisplay : Label::kReal;
    ss.display_id = s.display_id;
    ss.display_type = s.display_type;
    ss.device_type = s.device_type;
    out.push_back(std::move(ss));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

const char* to_string(ProtocolMode mode) {
  switch (mode) {
    case ProtocolMode::kTarget: return "target";
    case ProtocolMode::kUnseen: return "unseen";
    case ProtocolMode::kAll: return "all";
  }
  return "?";
}

std::vector<std::string> display_ids_of(const std::vector<PairSample>& all) {
  std::set<std::string> ids;
  for (const auto& s : all)
    if (s.label == Label::kDisplay) ids.insert(s.display_id);
  return {ids.begin(), ids.end()};
}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::vector<PairSample> train_partition(const std::vector<PairSample>& all,
                                        const std::vector<std::string>& train_displays) {
  std::vector<PairSample> out;
  for (const auto& s : all) {
    if (s.split != "train") continue;
    if (s.label == Label::kReal || contains(train_displays, s.display_id))
      out.push_back(s);
  }
  return out;
}

std::vector<PairSample> test_partition(const std::vector<PairSample>& all,
                                       const std::vector<std::string>& train_displays,
                                       ProtocolMode mode) {
  std::vector<PairSample> out;
  for (const auto& s : all) {
    if (s.split != "test") continue;
    if (s.label == Label::kReal) {
      out.push_back(s);
      continue;
    }
    bool in_train = contains(train_displays, s.display_id);
    if (mode == ProtocolMode::kAll || (mode == ProtocolMode::kTarget && in_train) ||
        (mode == ProtocolMode::kUnseen && !in_train))
      out.push_back(s);
  }
  return out;
}

EvalReport run_protocol(const ModelConfig& cfg, const std::vector<PairSample>& all,
                        const std::vector<std::string>& train_displays,
                        ProtocolMode mode) {
  std::vector<PairSample> train = train_partition(all, train_displays);
  std::vector<PairSample> test = test_partition(all, train_displays, mode);
  if (test.empty()) throw std::runtime_error("run_protocol: empty test partition");

  if (mode == ProtocolMode::kUnseen) {
    // Protocol integrity: unseen display ids must never appear in training.
    for (const auto& s : test)
      if (s.label == Label::kDisplay && contains(train_displays, s.display_id))
        throw std::logic_error("run_protocol: display-id leakage in unseen mode");
  }

  TrainedDetector det = train_detector(cfg, train);

  EvalReport report;
  report.protocol = to_string(mode);
  report.model = cfg.name;
  report.train_display_ids = train_displays;
  report.test_display_ids = display_ids_of(test);
  report.scored = score_samples(det, test);
  report.metrics = compute_metrics(report.scored);

  // Per-group breakdowns pair each group's display samples with all reals so
  // the ranking metrics stay defined.
  std::vector<ScoredSample> reals;
  for (const auto& s : report.scored)
    if (s.true_label == Label::kReal) reals.push_back(s);
  auto breakdown = [&](auto key_of) {
    std::map<std::string, Metrics> out;
    std::set<std::string> keys;
    for (const auto& s : report.scored)
      if (s.true_label == Label::kDisplay) keys.insert(key_of(s));
    for (const auto& k : keys) {
      std::vector<ScoredSample> grp = reals;
      for (const auto& s : report.scored)
        if (s.true_label == Label::kDisplay && key_of(s) == k) grp.push_back(s);
      out[k] = compute_metrics(grp);
    }
    return out;
  };
  report.by_display_id = breakdown([](const ScoredSample& s) { return s.display_id; });
  report.by_device_type = breakdown([](const ScoredSample& s) { return s.device_type; });
  return report;
}

std::map<std::string, EvalReport> ablation_suite(const ModelConfig& cfg,
                                                 const std::vector<PairSample>& all,
                                                 const std::vector<std::string>& train_displays,
                                                 ProtocolMode mode) {
  std::map<std::string, EvalReport> out;
  ModelConfig full = cfg;
  full.name = "mtofnet";
  out["full"] = run_protocol(full, all, train_displays, mode);

  ModelConfig wo_tof = cfg;
  wo_tof.name = "image_cnn";
  out["wo_tof"] = run_protocol(wo_tof, all, train_displays, mode);

  ModelConfig wo_repnet = cfg;
  wo_repnet.name = "naive_cnn";
  out["wo_repnet"] = run_protocol(wo_repnet, all, train_displays, mode);

  ModelConfig wo_rep_loss = cfg;
  wo_rep_loss.name = "mtofnet_norep";
  out["wo_rep_loss"] = run_protocol(wo_rep_loss, all, train_displays, mode);
  return out;
}

std::vector<MoirePoint> moire_scaling(const ModelConfig& cfg,
                                      const std::vector<PairSample>& all,
                                      const std::vector<int>& display_counts,
                                      std::uint64_t seed) {
  std::vector<std::string> ids = display_ids_of(all);
  Rng rng(Rng::mix(seed, 0x301e));
  rng.shuffle(ids);
  std::vector<MoirePoint> out;
  for (int k : display_counts) {
    if (k < 1 || k >= static_cast<int>(ids.size()))
      throw std::invalid_argument(
          "moire_scaling: display count must leave at least one unseen display");
    MoirePoint pt;
    pt.k = k;
    pt.train_displays.assign(ids.begin(), ids.begin() + k);
    ModelConfig cnn_cfg = cfg;
    cnn_cfg.name = "naive_cnn";
    cnn_cfg.cnn.augment = true;
    pt.report = run_protocol(cnn_cfg, all, pt.train_displays, ProtocolMode::kUnseen);
    out.push_back(std::move(pt));
  }
  return out;
}

TaxonomyMatrix confusion_by_taxonomy(const ModelConfig& cfg,
                                     const std::vector<PairSample>& all,
                                     const std::string& group_by) {
  if (group_by != "display_type" && group_by != "device_type")
    throw std::invalid_argument("confusion_by_taxonomy: group_by must be display_type or device_type");
  auto key_of = [&](const PairSample& s) {
    return group_by == "display_type" ? s.display_type : s.device_type;
  };
  std::set<std::string> group_set;
  for (const auto& s : all)
    if (s.label == Label::kDisplay) group_set.insert(key_of(s));

  TaxonomyMatrix mat;
  mat.groups.assign(group_set.begin(), group_set.end());
  std::size_t g = mat.groups.size();
  mat.cells.assign(g, std::vector<Metrics>(g));

  for (std::size_t i = 0; i < g; ++i) {
    // Displays belonging to the training group.
    std::set<std::string> train_ids;
    for (const auto& s : all)
      if (s.label == Label::kDisplay && key_of(s) == mat.groups[i])
        train_ids.insert(s.display_id);
    std::vector<std::string> train_displays(train_ids.begin(), train_ids.end());
    std::vector<PairSample> train = train_partition(all, train_displays);
    bool trainable = std::any_of(train.begin(), train.end(), [](const PairSample& s) {
      return s.label == Label::kDisplay;
    });
    if (!trainable) continue;  // cells in this row stay flagged (n == 0)
    TrainedDetector det = train_detector(cfg, train);

    for (std::size_t j = 0; j < g; ++j) {
      std::vector<PairSample> test;
      for (const auto& s : all) {
        if (s.split != "test") continue;
        if (s.label == Label::kReal || key_of(s) == mat.groups[j]) test.push_back(s);
      }
      bool has_display = std::any_of(test.begin(), test.end(), [](const PairSample& s) {
        return s.label == Label::kDisplay;
      });
      bool has_real = std::any_of(test.begin(), test.end(), [](const PairSample& s) {
        return s.label == Label::kReal;
      });
      if (!has_display || !has_real) continue;
      mat.cells[i][j] = compute_metrics(score_samples(det, test));
    }
  }
  return mat;
}

std::vector<FeatureRow> export_features_2d(RepNet& repnet,
                                           const std::vector<PairSample>& samples) {
  repnet.set_train(false);
  std::vector<FeatureRow> rows;
  std::vector<std::vector<double>> feats;
  for (const auto& s : samples) {
    Tensor f = pooled_feature(s.rgb, s.tof, repnet);
    FeatureRow row;
    row.sample_id = s.sample_id;
    row.label = to_string(s.label);
    row.display_id = s.display_id;
    row.full.assign(f.data(), f.data() + f.numel());
    feats.push_back(row.full);
    rows.push_back(std::move(row));
  }
  PcaModel pca = pca_fit(feats, 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto uv = pca_project(feats[i], pca);
    rows[i].u = uv[0];
    rows[i].v = uv[1];
  }
  return rows;
}

}  // namespace mtof
