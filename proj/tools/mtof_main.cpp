// Command-line entry point: dataset generation, training, evaluation,
// spectrum export and single-pair prediction, all driven by one JSON config.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtof/checkpoint.hpp"
#include "mtof/evaluation.hpp"
#include "mtof/spectrum.hpp"
#include "mtof/synth_gen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtof;

namespace {

// ---------------------------------------------------------------------------
// Config handling
// ---------------------------------------------------------------------------

json default_config() {
  return json{
      {"data_root", "data"},
      {"out_dir", "out"},
      {"seed", 0},
      {"preprocess",
       {{"resize_w", 180}, {"resize_h", 240}, {"crop", 0}, {"conf_threshold", 0.5}}},
      {"gen",
       {{"n_objects", 6},
        {"samples_per_object", 10},
        {"n_displays", 5},
        {"image_w", 80},
        {"image_h", 80},
        {"split", {{"train", 0.8}, {"val", 0.1}, {"test", 0.1}}}}},
      {"model",
       {{"name", "mtofnet"},
        {"widths", {32, 64, 128}},
        {"clf_hidden", 128},
        {"lambda_rec_m", 1.0},
        {"lambda_rec_t", 1.0},
        {"lambda_rep", 1.0},
        {"cnn_widths", {8, 16, 32}},
        {"augment", false},
        {"cnn_crop", 0}}},
      {"train",
       {{"lr", 1e-4},
        {"batch", 32},
        {"epochs", 20},
        {"staged", false},
        {"clf_lr", 1e-4},
        {"clf_batch", 32},
        {"clf_epochs", 20},
        {"finetune", false},
        {"svm_epochs", 200},
        {"svm_lr", 1e-2},
        {"svm_reg", 1e-3}}},
      {"protocol", {{"train_displays", json::array()}, {"mode", "unseen"}}},
      {"eval",
       {{"suite", "protocol"},
        {"display_counts", json::array()},
        {"group_by", "device_type"}}}};
}

// Rejects keys absent from the default schema so typos fail loudly.
void check_known_keys(const json& user, const json& schema, const std::string& prefix) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!schema.contains(it.key()))
      throw std::runtime_error("config: unknown key '" + path + "'");
    if (it.value().is_object() && schema.at(it.key()).is_object())
      check_known_keys(it.value(), schema.at(it.key()), path);
  }
}

void merge_into(json& base, const json& user) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
      merge_into(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

// Applies one --set key=value override; value is parsed as JSON when
// possible, otherwise kept as a string.
void apply_override(json& cfg, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("--set expects key=value, got '" + kv + "'");
  std::string key = kv.substr(0, eq);
  std::string raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* cur = &cfg;
  std::size_t pos = 0;
  while (true) {
    auto dot = key.find('.', pos);
    std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (dot == std::string::npos) {
      (*cur)[part] = value;
      break;
    }
    cur = &(*cur)[part];
    pos = dot + 1;
  }
}

json load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json cfg = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json user;
    in >> user;
    check_known_keys(user, cfg, "");
    merge_into(cfg, user);
  }
  for (const auto& kv : overrides) apply_override(cfg, kv);
  check_known_keys(cfg, default_config(), "");
  return cfg;
}

// FNV-1a over the canonical dump; output directories are keyed by this so
// re-runs with the same effective config land in the same place.
std::string config_hash(const json& cfg, const std::string& salt) {
  std::string text = salt + cfg.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 8);
}

fs::path artifact_dir(const json& cfg, const std::string& command) {
  fs::path dir = fs::path(cfg.at("out_dir").get<std::string>()) /
                 (command + "-" + config_hash(cfg, command));
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

std::vector<PairSample> load_all_pairs(const json& cfg) {
  Manifest manifest = load_manifest(cfg.at("data_root").get<std::string>());
  validate_manifest(manifest);
  const json& pp = cfg.at("preprocess");
  PreprocessOptions opts;
  opts.resize_w = pp.at("resize_w").get<int>();
  opts.resize_h = pp.at("resize_h").get<int>();
  opts.conf_threshold = pp.at("conf_threshold").get<double>();
  int crop = pp.at("crop").get<int>();
  std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

  std::vector<PairSample> out;
  std::uint64_t idx = 0;
  for (const auto& rec : manifest.records) {
    PairSample s = load_pair_sample(manifest, rec, opts);
    if (crop > 0) s = random_crop_pair(s, crop, Rng::mix(seed, 0xc409 + idx));
    out.push_back(std::move(s));
    ++idx;
  }
  return out;
}

ModelConfig model_config_from(const json& cfg) {
  const json& m = cfg.at("model");
  const json& t = cfg.at("train");
  ModelConfig mc;
  mc.name = m.at("name").get<std::string>();
  auto widths = m.at("widths").get<std::vector<int>>();
  mc.rep = {widths.at(0), widths.at(1), widths.at(2)};
  mc.clf_hidden = m.at("clf_hidden").get<int>();
  mc.rep_train.learning_rate = t.at("lr").get<double>();
  mc.rep_train.batch_size = t.at("batch").get<int>();
  mc.rep_train.epochs = t.at("epochs").get<int>();
  mc.rep_train.staged = t.at("staged").get<bool>();
  mc.rep_train.lambda_rec_m = m.at("lambda_rec_m").get<double>();
  mc.rep_train.lambda_rec_t = m.at("lambda_rec_t").get<double>();
  mc.rep_train.lambda_rep = m.at("lambda_rep").get<double>();
  mc.clf_train.learning_rate = t.at("clf_lr").get<double>();
  mc.clf_train.batch_size = t.at("clf_batch").get<int>();
  mc.clf_train.epochs = t.at("clf_epochs").get<int>();
  mc.clf_train.finetune = t.at("finetune").get<bool>();
  auto cw = m.at("cnn_widths").get<std::vector<int>>();
  mc.cnn.c1 = cw.at(0);
  mc.cnn.c2 = cw.at(1);
  mc.cnn.c3 = cw.at(2);
  mc.cnn.learning_rate = t.at("lr").get<double>();
  mc.cnn.batch_size = t.at("batch").get<int>();
  mc.cnn.epochs = t.at("epochs").get<int>();
  mc.cnn.augment = m.at("augment").get<bool>();
  mc.cnn.crop = m.at("cnn_crop").get<int>();
  mc.svm.epochs = t.at("svm_epochs").get<int>();
  mc.svm.lr = t.at("svm_lr").get<double>();
  mc.svm.reg = t.at("svm_reg").get<double>();
  mc.seed = cfg.at("seed").get<std::uint64_t>();
  return mc;
}

std::vector<std::string> resolve_train_displays(const json& cfg,
                                                const std::vector<PairSample>& all) {
  auto configured = cfg.at("protocol").at("train_displays").get<std::vector<std::string>>();
  if (!configured.empty()) return configured;
  // default: first half (rounded up) of the sorted display ids
  auto ids = display_ids_of(all);
  std::size_t k = (ids.size() + 1) / 2;
  ids.resize(k);
  std::cerr << "protocol: train_displays not set, defaulting to " << k
            << " display(s)\n";
  return ids;
}

ProtocolMode mode_from(const std::string& name) {
  if (name == "target") return ProtocolMode::kTarget;
  if (name == "unseen") return ProtocolMode::kUnseen;
  if (name == "all") return ProtocolMode::kAll;
  throw std::runtime_error("unknown protocol mode: " + name);
}

json metrics_json(const Metrics& m) {
  return json{{"accuracy", m.acc}, {"auroc", m.auroc}, {"ap", m.ap}, {"n", m.n}};
}

json report_json(const EvalReport& rep) {
  json scored = json::array();
  for (const auto& s : rep.scored)
    scored.push_back({{"sample_id", s.sample_id},
                      {"label", to_string(s.true_label)},
                      {"score", s.score},
                      {"predicted", to_string(s.predicted_label)},
                      {"display_id", s.display_id}});
  json by_display, by_device;
  for (const auto& [k, v] : rep.by_display_id) by_display[k] = metrics_json(v);
  for (const auto& [k, v] : rep.by_device_type) by_device[k] = metrics_json(v);
  return json{{"protocol", rep.protocol},
              {"model", rep.model},
              {"train_display_ids", rep.train_display_ids},
              {"test_display_ids", rep.test_display_ids},
              {"metrics", metrics_json(rep.metrics)},
              {"by_display_id", by_display},
              {"by_device_type", by_device},
              {"scored", scored}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out.good()) throw std::runtime_error("short write: " + path.string());
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_gen(const json& cfg) {
  const json& g = cfg.at("gen");
  SynthConfig sc;
  sc.n_objects = g.at("n_objects").get<int>();
  sc.samples_per_object = g.at("samples_per_object").get<int>();
  sc.image_w = g.at("image_w").get<int>();
  sc.image_h = g.at("image_h").get<int>();
  sc.seed = cfg.at("seed").get<std::uint64_t>();
  sc.split_ratios.train = g.at("split").at("train").get<double>();
  sc.split_ratios.val = g.at("split").at("val").get<double>();
  sc.split_ratios.test = g.at("split").at("test").get<double>();
  sc.conf_threshold = cfg.at("preprocess").at("conf_threshold").get<double>();
  sc.profiles = make_default_profiles(g.at("n_displays").get<int>(), sc.seed);

  std::string root = cfg.at("data_root").get<std::string>();
  Manifest m = gen_dataset(sc, root);
  std::cerr << "gen: wrote " << m.records.size() << " samples ("
            << sc.profiles.size() << " display profiles) under " << root << "\n";
  return 0;
}

int cmd_train(const json& cfg) {
  ModelConfig mc = model_config_from(cfg);
  auto all = load_all_pairs(cfg);
  auto train_displays = resolve_train_displays(cfg, all);
  auto train = train_partition(all, train_displays);
  std::cerr << "train: model " << mc.name << ", " << train.size()
            << " training pairs\n";

  fs::path dir = artifact_dir(cfg, "train");
  const json& echo = cfg;
  fs::path model_path = dir / "model.json";

  if (mc.name == "mtofnet" || mc.name == "mtofnet_norep") {
    TrainConfig rep_cfg = mc.rep_train;
    rep_cfg.seed = mc.seed;
    if (mc.name == "mtofnet_norep") rep_cfg.lambda_rep = 0.0;
    RepNet net(mc.rep, mc.seed);
    TrainingSet set;
    set.samples = train;
    auto rep_log = train_representation(net, set, rep_cfg);
    write_loss_log_csv((dir / "loss_log.csv").string(), rep_log);

    SpoofClassifier clf(mc.rep.c3, mc.clf_hidden, mc.seed);
    ClassifierTrainConfig clf_cfg = mc.clf_train;
    clf_cfg.seed = mc.seed;
    auto clf_log = train_classifier(net, clf, set, clf_cfg);
    {
      std::ofstream out(dir / "clf_log.csv");
      out << "epoch,ce,accuracy\n";
      out.precision(17);
      for (const auto& e : clf_log)
        out << e.epoch << "," << e.ce << "," << e.accuracy << "\n";
    }
    save_mtofnet(model_path.string(), net, clf, echo, rep_cfg.epochs, 0);
  } else if (mc.name == "naive_cnn" || mc.name == "image_cnn") {
    NaiveCnnConfig cc = mc.cnn;
    cc.seed = mc.seed;
    cc.in_channels = mc.name == "image_cnn" ? 3 : 4;
    NaiveCnnModel model(cc, mc.seed);
    auto log = naive_cnn_train(model, train, cc);
    {
      std::ofstream out(dir / "loss_log.csv");
      out << "epoch,ce\n";
      out.precision(17);
      for (const auto& e : log) out << e.epoch << "," << e.ce << "\n";
    }
    save_naive_cnn(model_path.string(), model, echo);
  } else if (mc.name == "pca_svm") {
    PcaSvmModel model = pca_svm_train(train, 45, 60, mc.svm);
    save_pca_svm(model_path.string(), model, echo);
  } else if (mc.name == "freq_svm_tof" || mc.name == "freq_svm_image") {
    FreqModality mod =
        mc.name == "freq_svm_image" ? FreqModality::kImage : FreqModality::kToF;
    FreqSvmModel model = freq_detector_train(train, mod, mc.svm);
    save_freq_svm(model_path.string(), model, echo);
  } else {
    std::cerr << "unknown model name: " << mc.name
              << "\nusage: known models are mtofnet, mtofnet_norep, pca_svm, "
                 "freq_svm_tof, freq_svm_image, naive_cnn, image_cnn\n";
    return 1;
  }
  std::cerr << "train: wrote " << model_path.string() << "\n";
  std::cout << model_path.string() << "\n";
  return 0;
}

int cmd_eval(const json& cfg) {
  ModelConfig mc = model_config_from(cfg);
  auto all = load_all_pairs(cfg);
  auto train_displays = resolve_train_displays(cfg, all);
  std::string mode_name = cfg.at("protocol").at("mode").get<std::string>();
  std::string suite = cfg.at("eval").at("suite").get<std::string>();
  fs::path dir = artifact_dir(cfg, "eval");
  fs::path report_path = dir / "report.json";

  json out;
  out["config"] = cfg;
  out["suite"] = suite;
  if (suite == "protocol") {
    ProtocolMode mode = mode_from(mode_name);
    if (mode == ProtocolMode::kUnseen)
      std::cerr << "eval: unseen protocol, asserting zero display-id leakage\n";
    EvalReport rep = run_protocol(mc, all, train_displays, mode);
    if (mode == ProtocolMode::kUnseen)
      std::cerr << "eval: leakage assertion passed\n";
    out["report"] = report_json(rep);
  } else if (suite == "ablation") {
    auto reports = ablation_suite(mc, all, train_displays, mode_from(mode_name));
    for (const auto& [key, rep] : reports) out["reports"][key] = report_json(rep);
  } else if (suite == "moire") {
    auto counts = cfg.at("eval").at("display_counts").get<std::vector<int>>();
    if (counts.empty()) {
      int n = static_cast<int>(display_ids_of(all).size());
      for (int k = 1; k < n; ++k) counts.push_back(k);
    }
    auto points = moire_scaling(mc, all, counts, mc.seed);
    out["points"] = json::array();
    for (const auto& pt : points)
      out["points"].push_back({{"k", pt.k},
                               {"train_displays", pt.train_displays},
                               {"report", report_json(pt.report)}});
  } else if (suite == "taxonomy") {
    std::string group_by = cfg.at("eval").at("group_by").get<std::string>();
    TaxonomyMatrix mat = confusion_by_taxonomy(mc, all, group_by);
    out["groups"] = mat.groups;
    out["cells"] = json::array();
    for (const auto& row : mat.cells) {
      json r = json::array();
      for (const auto& cell : row) r.push_back(metrics_json(cell));
      out["cells"].push_back(r);
    }
  } else {
    std::cerr << "unknown eval suite: " << suite
              << " (expected protocol|ablation|moire|taxonomy)\n";
    return 1;
  }
  write_json(report_path, out);
  std::cerr << "eval: wrote " << report_path.string() << "\n";
  std::cout << report_path.string() << "\n";
  return 0;
}

int cmd_spectrum(const json& cfg) {
  auto all = load_all_pairs(cfg);
  fs::path dir = artifact_dir(cfg, "spectrum");
  fs::path csv_path = dir / "spectra.csv";

  // Class-mean 1-D power spectra, per modality.
  std::map<std::string, std::vector<double>> sums;
  std::map<std::string, int> counts;
  auto add = [&](const std::string& key, const SpectrumProfile& p) {
    auto& acc = sums[key];
    if (acc.empty()) acc.assign(p.values.size(), 0.0);
    for (std::size_t i = 0; i < p.values.size(); ++i) acc[i] += p.values[i];
    counts[key] += 1;
  };
  for (const auto& s : all) {
    std::string cls = s.label == Label::kReal ? "real" : "display";
    add(cls + "_tof", power_spectrum_1d(s.tof));
    add(cls + "_image", power_spectrum_1d(to_grayscale(s.rgb)));
  }

  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());
  out << "series";
  std::size_t n_bins = sums.begin()->second.size();
  for (std::size_t i = 0; i < n_bins; ++i) out << ",bin" << i;
  out << "\n";
  out.precision(17);
  for (const auto& [key, acc] : sums) {
    out << key;
    for (double v : acc) out << "," << v / counts.at(key);
    out << "\n";
  }
  if (!out.good()) throw std::runtime_error("short write: " + csv_path.string());
  std::cerr << "spectrum: wrote " << csv_path.string() << "\n";
  std::cout << csv_path.string() << "\n";
  return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& rgb_path,
                const std::string& tof_path) {
  MtofnetBundle bundle = load_mtofnet(checkpoint_path);

  PreprocessOptions opts;
  if (bundle.config.contains("preprocess")) {
    const json& pp = bundle.config.at("preprocess");
    opts.resize_w = pp.value("resize_w", opts.resize_w);
    opts.resize_h = pp.value("resize_h", opts.resize_h);
    opts.conf_threshold = pp.value("conf_threshold", opts.conf_threshold);
  }

  RgbImage rgb = read_rgb_png(rgb_path);
  RawToFMap raw = read_raw_tof_png(tof_path);
  ToFMap tof = refine_tof(decode_raw_tof(raw), opts.conf_threshold);
  rgb = resize_map(rgb, opts.resize_w, opts.resize_h);
  tof = resize_map(tof, opts.resize_w, opts.resize_h);
  if (bundle.config.contains("preprocess")) {
    int crop = bundle.config.at("preprocess").value("crop", 0);
    if (crop > 0) {
      PairSample pair;
      pair.rgb = rgb;
      pair.tof = tof;
      pair = random_crop_pair(pair, crop, 0);
      rgb = pair.rgb;
      tof = pair.tof;
    }
  }

  Prediction p = predict_pair(rgb, tof, *bundle.repnet, *bundle.classifier);
  json out{{"label", to_string(p.label)},
           {"p_display", p.p_display},
           {"p_real", p.p_real}};
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"display-recapture detection pipeline"};
  app.require_subcommand(1);

  std::string config_path, model_name, mode_name, out_dir;
  std::string checkpoint_path, rgb_path, tof_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "JSON config file");
    if (config_required) opt->required();
    sub->add_option("--set", overrides, "override config keys, e.g. --set train.epochs=5");
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--out", out_dir, "override the output directory");
  };

  auto* gen = app.add_subcommand("gen", "generate the synthetic dataset");
  add_common(gen, true);

  auto* train = app.add_subcommand("train", "train a detector and write a checkpoint");
  add_common(train, true);
  train->add_option("--model", model_name, "detector to train");

  auto* eval = app.add_subcommand("eval", "run an evaluation suite");
  add_common(eval, true);
  eval->add_option("--model", model_name, "detector to evaluate");
  eval->add_option("--mode", mode_name, "protocol mode: target|unseen|all");

  auto* spectrum = app.add_subcommand("spectrum", "export class-mean power spectra");
  add_common(spectrum, true);

  auto* predict = app.add_subcommand("predict", "classify one rgb/tof pair");
  predict->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  predict->add_option("--rgb", rgb_path, "8-bit RGB PNG")->required();
  predict->add_option("--tof", tof_path, "16-bit raw ToF PNG")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (predict->parsed()) return cmd_predict(checkpoint_path, rgb_path, tof_path);

    json cfg = load_config(config_path, overrides);
    if (seed_set) cfg["seed"] = seed;
    if (!out_dir.empty()) cfg["out_dir"] = out_dir;
    // fold the flag overrides into the config before it is hashed
    if (!model_name.empty()) cfg["model"]["name"] = model_name;
    if (!mode_name.empty()) cfg["protocol"]["mode"] = mode_name;

    if (gen->parsed()) return cmd_gen(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_eval(cfg);
    if (spectrum->parsed()) return cmd_spectrum(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
