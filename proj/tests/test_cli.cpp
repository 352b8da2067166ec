#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mtof/checkpoint.hpp"
#include "mtof/evaluation.hpp"

using namespace mtof;
using nlohmann::json;
namespace fs = std::filesystem;

#ifndef MTOF_BIN
#error "MTOF_BIN must point at the mtof executable"
#endif

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;  // stdout only; stderr goes to a log file
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path out_file = fs::temp_directory_path() / ("mtof_cli_out_" + std::to_string(counter));
  fs::path err_file = fs::temp_directory_path() / ("mtof_cli_err_" + std::to_string(counter));
  ++counter;
  std::string cmd = std::string(MTOF_BIN) + " " + args + " > " + out_file.string() +
                    " 2> " + err_file.string();
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  return r;
}

// Shared tiny workspace: one generated dataset reused by every test.
struct Workspace {
  fs::path root;
  fs::path config_path;
  json config;

  Workspace() {
    root = fs::temp_directory_path() / "mtof_cli_ws";
    fs::remove_all(root);
    fs::create_directories(root);
    config = {
        {"data_root", (root / "data").string()},
        {"out_dir", (root / "out").string()},
        {"seed", 3},
        {"preprocess", {{"resize_w", 32}, {"resize_h", 32}, {"crop", 0}}},
        {"gen",
         {{"n_objects", 3},
          {"samples_per_object", 5},
          {"n_displays", 3},
          {"image_w", 32},
          {"image_h", 32},
          {"split", {{"train", 0.6}, {"val", 0.2}, {"test", 0.2}}}}},
        {"model", {{"widths", {2, 3, 4}}, {"clf_hidden", 8}, {"cnn_widths", {2, 3, 4}}}},
        {"train",
         {{"epochs", 2}, {"clf_epochs", 2}, {"batch", 8}, {"clf_batch", 8},
          {"svm_epochs", 50}}}};
    config_path = root / "cfg.json";
    std::ofstream(config_path) << config.dump(2);
    RunResult r = run_cli("gen --config " + config_path.string());
    REQUIRE(r.exit_code == 0);
  }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

std::string first_artifact(const RunResult& r) {
  // commands print the artifact path as their only stdout line
  std::string path = r.out;
  while (!path.empty() && (path.back() == '\n' || path.back() == '\r')) path.pop_back();
  return path;
}

ModelConfig mirror_model_config(const json& cfg, const std::string& name) {
  ModelConfig mc;
  mc.name = name;
  auto w = cfg.at("model").at("widths").get<std::vector<int>>();
  mc.rep = {w[0], w[1], w[2]};
  mc.clf_hidden = cfg.at("model").at("clf_hidden").get<int>();
  mc.rep_train.epochs = cfg.at("train").at("epochs").get<int>();
  mc.rep_train.batch_size = cfg.at("train").at("batch").get<int>();
  mc.clf_train.epochs = cfg.at("train").at("clf_epochs").get<int>();
  mc.clf_train.batch_size = cfg.at("train").at("clf_batch").get<int>();
  auto cw = cfg.at("model").at("cnn_widths").get<std::vector<int>>();
  mc.cnn.c1 = cw[0];
  mc.cnn.c2 = cw[1];
  mc.cnn.c3 = cw[2];
  mc.cnn.epochs = cfg.at("train").at("epochs").get<int>();
  mc.cnn.batch_size = cfg.at("train").at("batch").get<int>();
  mc.svm.epochs = cfg.at("train").at("svm_epochs").get<int>();
  mc.seed = cfg.at("seed").get<std::uint64_t>();
  return mc;
}

std::vector<PairSample> mirror_pairs(const json& cfg) {
  Manifest m = load_manifest(cfg.at("data_root").get<std::string>());
  PreprocessOptions opts;
  opts.resize_w = cfg.at("preprocess").at("resize_w").get<int>();
  opts.resize_h = cfg.at("preprocess").at("resize_h").get<int>();
  std::vector<PairSample> out;
  for (const auto& rec : m.records) out.push_back(load_pair_sample(m, rec, opts));
  return out;
}

}  // namespace

TEST_CASE("gen writes a dataset and re-runs reproduce it byte for byte") {
  Workspace& w = ws();
  fs::path manifest = fs::path(w.config.at("data_root").get<std::string>()) / "manifest.jsonl";
  REQUIRE(fs::exists(manifest));

  // same seed into a fresh root: identical metadata and pixel data
  fs::path root2 = w.root / "data2";
  RunResult r = run_cli("gen --config " + w.config_path.string() + " --set data_root=\"" +
                        root2.string() + "\"");
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(manifest) == slurp(root2 / "manifest.jsonl"));
  CHECK(slurp(fs::path(w.config.at("data_root").get<std::string>()) / "rgb" /
              "o00_s00_real.png") == slurp(root2 / "rgb" / "o00_s00_real.png"));
}

TEST_CASE("train writes a loadable checkpoint and a loss log") {
  Workspace& w = ws();
  RunResult r = run_cli("train --config " + w.config_path.string() + " --model mtofnet");
  REQUIRE(r.exit_code == 0);
  fs::path model_path = first_artifact(r);
  REQUIRE(fs::exists(model_path));

  MtofnetBundle bundle = load_mtofnet(model_path.string());
  CHECK(bundle.config.at("model").at("name") == "mtofnet");

  // loss log has one row per epoch plus the header
  std::ifstream log(model_path.parent_path() / "loss_log.csv");
  std::string line;
  int rows = 0;
  while (std::getline(log, line))
    if (!line.empty()) ++rows;
  CHECK(rows == w.config.at("train").at("epochs").get<int>() + 1);
}

TEST_CASE("train rejects an unknown model with a nonzero exit") {
  RunResult r = run_cli("train --config " + ws().config_path.string() + " --model bogus");
  CHECK(r.exit_code != 0);
}

TEST_CASE("unknown config keys are rejected before any work") {
  Workspace& w = ws();
  json bad = w.config;
  bad["trian"] = {{"epochs", 5}};
  fs::path p = w.root / "bad.json";
  std::ofstream(p) << bad.dump();
  RunResult r = run_cli("train --config " + p.string());
  CHECK(r.exit_code != 0);
}

TEST_CASE("set overrides reach the training loop") {
  Workspace& w = ws();
  RunResult r = run_cli("train --config " + w.config_path.string() +
                        " --model mtofnet --set train.epochs=3");
  REQUIRE(r.exit_code == 0);
  fs::path model_path = first_artifact(r);
  std::ifstream log(fs::path(model_path).parent_path() / "loss_log.csv");
  std::string line;
  int rows = 0;
  while (std::getline(log, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);  // header + 3 epochs
}

TEST_CASE("eval report matches a direct library run") {
  Workspace& w = ws();
  RunResult r = run_cli("eval --config " + w.config_path.string() +
                        " --model pca_svm --mode unseen --set "
                        "protocol.train_displays=[\\\"display_00\\\",\\\"display_01\\\"]");
  REQUIRE(r.exit_code == 0);
  json report = json::parse(slurp(first_artifact(r)));
  CHECK(report.at("suite") == "protocol");

  ModelConfig mc = mirror_model_config(w.config, "pca_svm");
  auto all = mirror_pairs(w.config);
  EvalReport direct =
      run_protocol(mc, all, {"display_00", "display_01"}, ProtocolMode::kUnseen);
  const json& m = report.at("report").at("metrics");
  CHECK(m.at("auroc").get<double>() == direct.metrics.auroc);
  CHECK(m.at("ap").get<double>() == direct.metrics.ap);
  CHECK(m.at("accuracy").get<double>() == direct.metrics.acc);
  CHECK(m.at("n").get<int>() == direct.metrics.n);
}

TEST_CASE("spectrum exports one mean profile per class and modality") {
  Workspace& w = ws();
  RunResult r = run_cli("spectrum --config " + w.config_path.string());
  REQUIRE(r.exit_code == 0);
  std::ifstream csv(first_artifact(r));
  std::string line;
  std::vector<std::string> series;
  std::getline(csv, line);  // header
  CHECK(line.rfind("series,bin0,", 0) == 0);
  while (std::getline(csv, line))
    if (!line.empty()) series.push_back(line.substr(0, line.find(',')));
  CHECK(series == std::vector<std::string>{"display_image", "display_tof", "real_image",
                                           "real_tof"});
}

TEST_CASE("predict matches the library inference path exactly") {
  Workspace& w = ws();
  RunResult t = run_cli("train --config " + w.config_path.string() + " --model mtofnet");
  REQUIRE(t.exit_code == 0);
  std::string ckpt = first_artifact(t);

  fs::path root = w.config.at("data_root").get<std::string>();
  std::string rgb_path = (root / "rgb" / "o00_s00_display_00.png").string();
  std::string tof_path = (root / "tof_raw" / "o00_s00_display_00.png").string();
  RunResult p = run_cli("predict --checkpoint " + ckpt + " --rgb " + rgb_path +
                        " --tof " + tof_path);
  REQUIRE(p.exit_code == 0);
  json out = json::parse(p.out);
  double score = out.at("p_display").get<double>();
  CHECK(score >= 0.0);
  CHECK(score <= 1.0);

  MtofnetBundle bundle = load_mtofnet(ckpt);
  PreprocessOptions opts;
  opts.resize_w = w.config.at("preprocess").at("resize_w").get<int>();
  opts.resize_h = w.config.at("preprocess").at("resize_h").get<int>();
  RgbImage rgb = resize_map(read_rgb_png(rgb_path), opts.resize_w, opts.resize_h);
  ToFMap tof = resize_map(refine_tof(decode_raw_tof(read_raw_tof_png(tof_path)), 0.5),
                          opts.resize_w, opts.resize_h);
  Prediction expected = predict_pair(rgb, tof, *bundle.repnet, *bundle.classifier);
  CHECK(score == expected.p_display);
  CHECK(out.at("label").get<std::string>() == to_string(expected.label));

  RunResult bad = run_cli("predict --checkpoint " + ckpt +
                          " --rgb /nonexistent.png --tof " + tof_path);
  CHECK(bad.exit_code != 0);
}
