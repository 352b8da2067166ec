// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 6 and 8 train real models on the synthetic benchmark and
// dominate the runtime; everything else is sub-second.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mtof/data_model.hpp"
#include "mtof/evaluation.hpp"
#include "mtof/representation.hpp"
#include "mtof/rng.hpp"
#include "mtof/spectrum.hpp"
#include "mtof/synth_gen.hpp"

using namespace mtof;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Criterion {
  int id;
  std::string description;
  std::function<bool(std::string&)> run;  // fills a failure note
};

// ---------------------------------------------------------------------------
// 1. ToF word round trip
// ---------------------------------------------------------------------------

bool crit_tof_roundtrip(std::string& note) {
  auto t0 = Clock::now();
  for (std::uint32_t w = 0; w <= 0xFFFF; ++w) {
    DecodedPixel p = decode_tof_pixel(static_cast<std::uint16_t>(w));
    std::uint16_t back = encode_tof_pixel(p.depth_mm, p.confidence);
    if (back != w) {
      note = "word " + std::to_string(w) + " came back as " + std::to_string(back);
      return false;
    }
  }
  double dt = seconds_since(t0);
  if (dt >= 1.0) {
    note = "took " + std::to_string(dt) + "s (budget 1s)";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 2. Azimuthal average vs brute-force radius binning
// ---------------------------------------------------------------------------

std::vector<double> azimuthal_brute_force(const Spectrum2D& spec) {
  int n_bins = std::min(spec.width, spec.height) / 2;
  int cx = spec.width / 2, cy = spec.height / 2;
  std::vector<double> sum(n_bins, 0.0);
  std::vector<long> cnt(n_bins, 0);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      long r = std::lround(std::hypot(double(x - cx), double(y - cy)));
      if (r < n_bins) {
        sum[r] += spec.at(y, x);
        ++cnt[r];
      }
    }
  for (int b = 0; b < n_bins; ++b) sum[b] = cnt[b] ? sum[b] / cnt[b] : 0.0;
  return sum;
}

bool crit_azimuthal(std::string& note) {
  auto t0 = Clock::now();
  Rng rng(20260823);
  for (int trial = 0; trial < 200; ++trial) {
    Spectrum2D spec;
    spec.width = 2 + static_cast<int>(rng.uniform_int(31));   // 2..32
    spec.height = 2 + static_cast<int>(rng.uniform_int(31));
    spec.magnitude.resize(static_cast<std::size_t>(spec.width) * spec.height);
    for (auto& v : spec.magnitude) v = rng.uniform(0.0, 100.0);
    std::vector<double> expected = azimuthal_brute_force(spec);
    SpectrumProfile got = azimuthal_average(spec);
    if (got.values != expected) {
      note = "mismatch on trial " + std::to_string(trial) + " (" +
             std::to_string(spec.width) + "x" + std::to_string(spec.height) + ")";
      return false;
    }
  }
  double dt = seconds_since(t0);
  if (dt >= 5.0) {
    note = "took " + std::to_string(dt) + "s (budget 5s)";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 3. DFT magnitude vs direct O(N^4) DFT + Parseval
// ---------------------------------------------------------------------------

bool crit_dft(std::string& note) {
  Rng rng(77);
  const int W = 8, H = 8;
  ToFMap map;
  map.width = W;
  map.height = H;
  map.values.resize(W * H);
  for (auto& v : map.values) v = rng.uniform();
  Spectrum2D spec = dft2_magnitude(map);

  const double two_pi = 6.283185307179586476925286766559;
  double freq_energy = 0.0, max_rel = 0.0;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      double re = 0.0, im = 0.0;
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          double phase = -two_pi * (double(u) * x / W + double(v) * y / H);
          double f = map.at(y, x);
          re += f * std::cos(phase);
          im += f * std::sin(phase);
        }
      double mag = std::hypot(re, im);
      freq_energy += mag * mag;
      // the library spectrum is fftshifted: DC sits at (H/2, W/2)
      double got = spec.at((v + H / 2) % H, (u + W / 2) % W);
      double rel = std::abs(got - mag) / std::max(1.0, mag);
      max_rel = std::max(max_rel, rel);
    }
  if (max_rel >= 1e-9) {
    note = "max relative magnitude error " + std::to_string(max_rel);
    return false;
  }

  double spatial_energy = 0.0;
  for (double v : map.values) spatial_energy += v * v;
  double parseval_rel =
      std::abs(freq_energy - spatial_energy * W * H) / (spatial_energy * W * H);
  if (parseval_rel >= 1e-6) {
    note = "Parseval relative error " + std::to_string(parseval_rel);
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 4. Representation losses vs central finite differences
// ---------------------------------------------------------------------------

bool crit_gradients(std::string& note) {
  SynthConfig cfg;
  cfg.image_w = 8;
  cfg.image_h = 8;
  auto profiles = make_default_profiles(2, 5);
  TrainingSet set;
  for (int o = 0; o < 2; ++o) {
    SynthSample real = gen_real_scene(cfg, o, 300 + o);
    set.samples.push_back(real.sample);
    set.samples.push_back(gen_display_scene(real, profiles[o], 350 + o).sample);
  }
  RepNet net({2, 3, 4}, 11);
  net.set_train(true);
  RepBatch batch = make_rep_batch(set, {0, 1, 2, 3});
  auto params = net.params();

  struct LossSpec {
    const char* name;
    double wm, wt, wrep;
  };
  const LossSpec losses[] = {{"rec_m", 1, 0, 0}, {"rec_t", 0, 1, 0}, {"rep", 0, 0, 1}};

  Rng rng(404);
  for (const auto& loss : losses) {
    for (auto* p : params) p->grad.fill(0.0);
    rep_losses(net, batch, loss.wm, loss.wt, loss.wrep, true);

    int checked = 0;
    while (checked < 20) {
      auto* p = params[rng.uniform_int(params.size())];
      std::size_t idx = rng.uniform_int(p->value.numel());
      double analytic = p->grad[idx];

      const double eps = 1e-5;
      double orig = p->value[idx];
      p->value[idx] = orig + eps;
      double up = rep_losses(net, batch, loss.wm, loss.wt, loss.wrep, false).total;
      p->value[idx] = orig - eps;
      double down = rep_losses(net, batch, loss.wm, loss.wt, loss.wrep, false).total;
      p->value[idx] = orig;

      double fd = (up - down) / (2.0 * eps);
      // skip directions the loss barely depends on: central differences
      // bottom out around 1e-11 here, so tiny true gradients are all noise
      if (std::max(std::abs(analytic), std::abs(fd)) < 1e-6) continue;
      double rel = std::abs(analytic - fd) / std::max(std::abs(analytic), std::abs(fd));
      if (rel >= 1e-4) {
        note = std::string(loss.name) + " at " + p->name + "[" + std::to_string(idx) +
               "]: analytic " + std::to_string(analytic) + ", fd " + std::to_string(fd);
        return false;
      }
      ++checked;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// 5. AUROC / AP vs brute-force estimators
// ---------------------------------------------------------------------------

double auroc_brute_force(const std::vector<ScoredSample>& s) {
  double wins = 0.0;
  long pairs = 0;
  for (const auto& d : s) {
    if (d.true_label != Label::kDisplay) continue;
    for (const auto& r : s) {
      if (r.true_label != Label::kReal) continue;
      ++pairs;
      if (d.score > r.score)
        wins += 1.0;
      else if (d.score == r.score)
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

double ap_brute_force(std::vector<ScoredSample> s) {
  std::sort(s.begin(), s.end(), [](const ScoredSample& a, const ScoredSample& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.sample_id < b.sample_id;
  });
  double sum = 0.0;
  long positives = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k].true_label != Label::kDisplay) continue;
    ++positives;
    sum += static_cast<double>(positives) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(positives);
}

bool crit_metrics(std::string& note) {
  Rng rng(9090);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 2 + static_cast<int>(rng.uniform_int(49));  // 2..50
    std::vector<ScoredSample> s(n);
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      s[i].sample_id = "s" + std::to_string(100 + i);
      s[i].true_label = rng.uniform() < 0.5 ? Label::kDisplay : Label::kReal;
      // coarse score grid so ties are common
      s[i].score = static_cast<double>(rng.uniform_int(8)) / 8.0;
      has_pos |= s[i].true_label == Label::kDisplay;
      has_neg |= s[i].true_label == Label::kReal;
    }
    if (!has_pos) s[0].true_label = Label::kDisplay;
    if (!has_neg) s[n - 1].true_label = Label::kReal;

    if (auroc(s) != auroc_brute_force(s)) {
      note = "AUROC mismatch on trial " + std::to_string(trial);
      return false;
    }
    if (average_precision(s) != ap_brute_force(s)) {
      note = "AP mismatch on trial " + std::to_string(trial);
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Shared synthetic benchmark (criteria 6, 8)
// ---------------------------------------------------------------------------

// 6 objects x 8 samples, each recaptured on all 5 display profiles, 80x80.
// Splits are fixed per (object, condition) group: 4 train, 1 val, 3 test.
std::vector<PairSample> benchmark_dataset() {
  SynthConfig cfg;
  cfg.image_w = 80;
  cfg.image_h = 80;
  cfg.seed = 2718;
  auto profiles = make_default_profiles(5, cfg.seed);
  const int samples_per_object = 8;
  const char* splits[samples_per_object] = {"train", "train", "train", "train",
                                            "val",   "test",  "test",  "test"};
  std::vector<PairSample> all;
  for (int o = 0; o < 6; ++o) {
    for (int s = 0; s < samples_per_object; ++s) {
      SynthSample real =
          gen_real_scene(cfg, o, Rng::mix(cfg.seed, 1000 + o * 100 + s));
      real.sample.split = splits[s];
      real.sample.sample_id = "o" + std::to_string(o) + "_s" + std::to_string(s);
      all.push_back(real.sample);
      for (std::size_t d = 0; d < profiles.size(); ++d) {
        SynthSample disp = gen_display_scene(
            real, profiles[d], Rng::mix(cfg.seed, 5000 + (o * 100 + s) * 10 + d));
        disp.sample.split = splits[s];
        disp.sample.sample_id = real.sample.sample_id + "_d" + std::to_string(d);
        all.push_back(disp.sample);
      }
    }
  }
  return all;
}

// Frozen hyperparameters for the benchmark models.
ModelConfig benchmark_model_config() {
  ModelConfig mc;
  mc.name = "mtofnet";
  mc.rep = {8, 16, 32};
  mc.rep_train.epochs = 10;
  mc.rep_train.batch_size = 16;
  mc.rep_train.learning_rate = 1e-3;
  mc.clf_hidden = 32;
  mc.clf_train.epochs = 10;
  mc.clf_train.batch_size = 16;
  mc.clf_train.learning_rate = 1e-2;
  mc.cnn.c1 = 8;
  mc.cnn.c2 = 16;
  mc.cnn.c3 = 32;
  mc.cnn.epochs = 10;
  mc.cnn.batch_size = 16;
  mc.cnn.learning_rate = 1e-3;
  mc.seed = 2718;
  return mc;
}

bool crit_benchmark(std::string& note) {
  auto t0 = Clock::now();
  auto all = benchmark_dataset();
  std::vector<std::string> train_displays = {"display_00", "display_01", "display_02"};
  auto reports =
      ablation_suite(benchmark_model_config(), all, train_displays, ProtocolMode::kUnseen);

  double full = reports.at("full").metrics.auroc;
  double naive = reports.at("wo_repnet").metrics.auroc;
  double wo_tof = reports.at("wo_tof").metrics.auroc;
  double wo_rep = reports.at("wo_rep_loss").metrics.auroc;
  std::fprintf(stderr,
               "  benchmark unseen AUROC: full %.4f, naive_cnn %.4f, wo_tof %.4f, "
               "wo_rep_loss %.4f (%.0fs)\n",
               full, naive, wo_tof, wo_rep, seconds_since(t0));

  if (full < 0.90) {
    note = "full model unseen AUROC " + std::to_string(full) + " < 0.90";
    return false;
  }
  if (full - naive < 0.05) {
    note = "margin over naive CNN " + std::to_string(full - naive) + " < 0.05";
    return false;
  }
  if (wo_tof > full) {
    note = "ablation without ToF (" + std::to_string(wo_tof) + ") beats full model";
    return false;
  }
  if (wo_rep > full) {
    note = "ablation without rep loss (" + std::to_string(wo_rep) + ") beats full model";
    return false;
  }
  double dt = seconds_since(t0);
  if (dt >= 600.0) {
    note = "took " + std::to_string(dt) + "s (budget 600s)";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 7. Leakage guard over randomized unseen partitions
// ---------------------------------------------------------------------------

bool crit_leakage(std::string& note) {
  // metadata-only samples; partitioning never looks at pixels
  std::vector<PairSample> all;
  const int n_displays = 6;
  for (int o = 0; o < 4; ++o)
    for (int s = 0; s < 3; ++s) {
      PairSample real;
      real.label = Label::kReal;
      real.sample_id = "r" + std::to_string(o * 10 + s);
      real.split = s == 0 ? "train" : (s == 1 ? "val" : "test");
      all.push_back(real);
      for (int d = 0; d < n_displays; ++d) {
        PairSample disp = real;
        disp.label = Label::kDisplay;
        disp.display_id = "display_" + std::to_string(d);
        disp.sample_id = real.sample_id + "_d" + std::to_string(d);
        all.push_back(disp);
      }
    }

  std::vector<std::string> ids = display_ids_of(all);
  Rng rng(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> shuffled = ids;
    rng.shuffle(shuffled);
    std::size_t k = 1 + rng.uniform_int(ids.size() - 1);  // 1..n-1 train displays
    std::vector<std::string> train_ids(shuffled.begin(), shuffled.begin() + k);

    auto train = train_partition(all, train_ids);
    auto test = test_partition(all, train_ids, ProtocolMode::kUnseen);
    std::set<std::string> train_seen, test_seen;
    for (const auto& s : train)
      if (s.label == Label::kDisplay) train_seen.insert(s.display_id);
    for (const auto& s : test)
      if (s.label == Label::kDisplay) test_seen.insert(s.display_id);
    for (const auto& id : test_seen)
      if (train_seen.count(id)) {
        note = "trial " + std::to_string(trial) + ": display " + id +
               " appears in both partitions";
        return false;
      }
    // the guard inside run_protocol must agree with the partition helpers
    if (test.empty() || train.empty()) {
      note = "trial " + std::to_string(trial) + ": degenerate partition";
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// 8. Moire scaling
// ---------------------------------------------------------------------------

bool crit_moire_scaling(std::string& note) {
  auto all = benchmark_dataset();
  ModelConfig mc = benchmark_model_config();
  auto points = moire_scaling(mc, all, {1, 4}, mc.seed);
  double naive_k1 = points[0].report.metrics.auroc;
  double naive_k4 = points[1].report.metrics.auroc;

  ModelConfig full = mc;
  full.name = "mtofnet";
  EvalReport full_k1 =
      run_protocol(full, all, points[0].train_displays, ProtocolMode::kUnseen);
  std::fprintf(stderr,
               "  moire scaling unseen AUROC: naive k=1 %.4f, naive k=4 %.4f, "
               "full k=1 %.4f\n",
               naive_k1, naive_k4, full_k1.metrics.auroc);

  if (naive_k4 < naive_k1) {
    note = "naive CNN got worse with more displays (k=4 " + std::to_string(naive_k4) +
           " < k=1 " + std::to_string(naive_k1) + ")";
    return false;
  }
  if (full_k1.metrics.auroc <= naive_k4) {
    note = "full model at k=1 (" + std::to_string(full_k1.metrics.auroc) +
           ") does not beat naive CNN at k=4 (" + std::to_string(naive_k4) + ")";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 9. Same-seed determinism
// ---------------------------------------------------------------------------

bool crit_determinism(std::string& note) {
  SynthConfig cfg;
  cfg.image_w = 16;
  cfg.image_h = 16;
  auto profiles = make_default_profiles(3, 9);
  std::vector<PairSample> all;
  const char* splits[4] = {"train", "train", "val", "test"};
  for (int o = 0; o < 3; ++o)
    for (int s = 0; s < 4; ++s) {
      SynthSample real = gen_real_scene(cfg, o, Rng::mix(9, o * 10 + s));
      real.sample.split = splits[s];
      real.sample.sample_id = "o" + std::to_string(o) + "_s" + std::to_string(s);
      all.push_back(real.sample);
      for (int d = 0; d < 3; ++d) {
        SynthSample disp =
            gen_display_scene(real, profiles[d], Rng::mix(9, 500 + (o * 10 + s) * 4 + d));
        disp.sample.split = splits[s];
        disp.sample.sample_id = real.sample.sample_id + "_d" + std::to_string(d);
        all.push_back(disp.sample);
      }
    }

  ModelConfig mc;
  mc.rep = {2, 3, 4};
  mc.rep_train.epochs = 2;
  mc.clf_hidden = 8;
  mc.clf_train.epochs = 2;
  mc.cnn.c1 = 2;
  mc.cnn.c2 = 3;
  mc.cnn.c3 = 4;
  mc.cnn.epochs = 2;
  mc.seed = 99;

  for (const std::string name : {"mtofnet", "naive_cnn"}) {
    mc.name = name;
    EvalReport a = run_protocol(mc, all, {"display_00", "display_01"}, ProtocolMode::kUnseen);
    EvalReport b = run_protocol(mc, all, {"display_00", "display_01"}, ProtocolMode::kUnseen);
    auto bits_equal = [](double x, double y) {
      return std::memcmp(&x, &y, sizeof(double)) == 0;
    };
    if (!bits_equal(a.metrics.auroc, b.metrics.auroc) ||
        !bits_equal(a.metrics.ap, b.metrics.ap) ||
        !bits_equal(a.metrics.acc, b.metrics.acc)) {
      note = name + ": repeated run changed the metrics";
      return false;
    }
    for (std::size_t i = 0; i < a.scored.size(); ++i)
      if (!bits_equal(a.scored[i].score, b.scored[i].score)) {
        note = name + ": repeated run changed score of " + a.scored[i].sample_id;
        return false;
      }
  }
  return true;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "16-bit ToF word encode/decode round trip, exhaustive, <1s", crit_tof_roundtrip},
      {2, "azimuthal average matches brute-force radius binning on 200 random spectra",
       crit_azimuthal},
      {3, "DFT magnitude matches direct DFT within 1e-9, Parseval within 1e-6", crit_dft},
      {4, "all three representation losses match finite differences (rel < 1e-4)",
       crit_gradients},
      {5, "AUROC and AP match brute-force estimators exactly on 500 tie-heavy cases",
       crit_metrics},
      {6, "synthetic benchmark: full model >= 0.90 unseen AUROC, beats naive CNN by "
          ">= 0.05, ablations do not exceed it",
       crit_benchmark},
      {7, "1000 randomized unseen partitions show zero display-id leakage", crit_leakage},
      {8, "more training displays help the naive CNN; full model still wins at one display",
       crit_moire_scaling},
      {9, "same-seed train+eval reproduces all metrics bit-exactly", crit_determinism},
  };

  int failures = 0;
  for (auto& c : criteria) {
    std::string note;
    bool ok = false;
    try {
      ok = c.run(note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    if (ok) {
      std::printf("[PASS] criterion %d: %s\n", c.id, c.description.c_str());
    } else {
      std::printf("[FAIL] criterion %d: %s (%s)\n", c.id, c.description.c_str(),
                  note.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
