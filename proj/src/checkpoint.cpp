#include "mtof/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mtof {

using nlohmann::json;

namespace {
const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<double>& data) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  std::size_t n = data.size() * sizeof(double);
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    unsigned v = bytes[i] << 16;
    if (i + 1 < n) v |= bytes[i + 1] << 8;
    if (i + 2 < n) v |= bytes[i + 2];
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? kB64Alphabet[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? kB64Alphabet[v & 63] : '=');
  }
  return out;
}

std::vector<double> base64_decode_doubles(const std::string& text) {
  static int rev[256];
  static bool init = [] {
    for (int i = 0; i < 256; ++i) rev[i] = -1;
    for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64Alphabet[i])] = i;
    return true;
  }();
  (void)init;
  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  unsigned buf = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n') continue;
    int v = rev[static_cast<unsigned char>(c)];
    if (v < 0) throw std::runtime_error("base64: invalid character");
    buf = (buf << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back(static_cast<unsigned char>((buf >> bits) & 0xff));
    }
  }
  if (bytes.size() % sizeof(double) != 0)
    throw std::runtime_error("base64: payload is not a multiple of 8 bytes");
  std::vector<double> out(bytes.size() / sizeof(double));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

void Checkpoint::put_tensor(const std::string& name, const Tensor& t) {
  meta_["tensors"][name] = {{"shape", t.shape()}, {"data", base64_encode(t.vec())}};
}

bool Checkpoint::has_tensor(const std::string& name) const {
  return meta_.contains("tensors") && meta_["tensors"].contains(name);
}

Tensor Checkpoint::get_tensor(const std::string& name) const {
  const json& j = meta_.at("tensors").at(name);
  std::vector<int> shape = j.at("shape").get<std::vector<int>>();
  std::vector<double> data = base64_decode_doubles(j.at("data").get<std::string>());
  if (data.size() != Tensor::numel_of(shape))
    throw std::runtime_error("checkpoint tensor size mismatch: " + name);
  return Tensor(shape, std::move(data));
}

void Checkpoint::put_vector(const std::string& name, const std::vector<double>& v) {
  meta_["vectors"][name] = base64_encode(v);
}

std::vector<double> Checkpoint::get_vector(const std::string& name) const {
  return base64_decode_doubles(meta_.at("vectors").at(name).get<std::string>());
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << meta_.dump();
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  Checkpoint ck;
  in >> ck.meta_;
  if (ck.meta_.value("magic", "") != "mtof-checkpoint")
    throw std::runtime_error("not a checkpoint file: " + path);
  return ck;
}

// ---------------------------------------------------------------------------
// mtofnet
// ---------------------------------------------------------------------------

void save_mtofnet(const std::string& path, RepNet& net, SpoofClassifier& clf,
                  const json& config_echo, int epoch, std::uint64_t rng_state) {
  Checkpoint ck;
  ck.set_kind("mtofnet");
  json cfg = config_echo;
  cfg["rep_widths"] = {net.config().c1, net.config().c2, net.config().c3};
  cfg["clf_hidden"] = clf.hidden_dim();
  ck.set_config(cfg);
  ck.set_epoch(epoch);
  ck.set_rng_state(rng_state);
  for (nn::Param* p : net.params()) ck.put_tensor(p->name, p->value);
  auto bufs = net.buffers();
  auto names = net.buffer_names();
  for (std::size_t i = 0; i < bufs.size(); ++i) ck.put_tensor(names[i], *bufs[i]);
  for (nn::Param* p : clf.params()) ck.put_tensor(p->name, p->value);
  ck.save(path);
}

MtofnetBundle load_mtofnet(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.kind() != "mtofnet") throw std::runtime_error("expected mtofnet checkpoint");
  json cfg = ck.config();
  auto widths = cfg.at("rep_widths").get<std::vector<int>>();
  RepNetConfig rc{widths[0], widths[1], widths[2]};
  MtofnetBundle bundle;
  bundle.config = cfg;
  bundle.epoch = ck.epoch();
  bundle.repnet = std::make_unique<RepNet>(rc, 0);
  for (nn::Param* p : bundle.repnet->params()) p->value = ck.get_tensor(p->name);
  auto bufs = bundle.repnet->buffers();
  auto names = bundle.repnet->buffer_names();
  for (std::size_t i = 0; i < bufs.size(); ++i) *bufs[i] = ck.get_tensor(names[i]);
  bundle.classifier =
      std::make_unique<SpoofClassifier>(rc.c3, cfg.at("clf_hidden").get<int>(), 0);
  for (nn::Param* p : bundle.classifier->params()) p->value = ck.get_tensor(p->name);
  bundle.repnet->set_train(false);
  bundle.classifier->set_train(false);
  return bundle;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

void save_naive_cnn(const std::string& path, NaiveCnnModel& model,
                    const json& config_echo) {
  Checkpoint ck;
  ck.set_kind("naive_cnn");
  json cfg = config_echo;
  cfg["in_channels"] = model.config().in_channels;
  cfg["widths"] = {model.config().c1, model.config().c2, model.config().c3};
  ck.set_config(cfg);
  for (nn::Param* p : model.params()) ck.put_tensor(p->name, p->value);
  ck.save(path);
}

std::unique_ptr<NaiveCnnModel> load_naive_cnn(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.kind() != "naive_cnn") throw std::runtime_error("expected naive_cnn checkpoint");
  json cfg = ck.config();
  NaiveCnnConfig cc;
  cc.in_channels = cfg.at("in_channels").get<int>();
  auto widths = cfg.at("widths").get<std::vector<int>>();
  cc.c1 = widths[0];
  cc.c2 = widths[1];
  cc.c3 = widths[2];
  auto model = std::make_unique<NaiveCnnModel>(cc, 0);
  for (nn::Param* p : model->params()) p->value = ck.get_tensor(p->name);
  model->set_train(false);
  return model;
}

void save_pca_svm(const std::string& path, const PcaSvmModel& model,
                  const json& config_echo) {
  Checkpoint ck;
  ck.set_kind("pca_svm");
  json cfg = config_echo;
  cfg["down_w"] = model.down_w;
  cfg["down_h"] = model.down_h;
  ck.set_config(cfg);
  ck.put_vector("pca.mean", model.pca.mean);
  ck.put_vector("pca.axis0", model.pca.axes[0]);
  ck.put_vector("pca.axis1", model.pca.axes[1]);
  ck.put_vector("pca.explained_variance", model.pca.explained_variance);
  ck.put_vector("svm.weight", model.svm.weight);
  ck.put_scalar("svm.bias", model.svm.bias);
  ck.save(path);
}

PcaSvmModel load_pca_svm(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.kind() != "pca_svm") throw std::runtime_error("expected pca_svm checkpoint");
  PcaSvmModel m;
  m.down_w = ck.config().at("down_w").get<int>();
  m.down_h = ck.config().at("down_h").get<int>();
  m.pca.mean = ck.get_vector("pca.mean");
  m.pca.axes = {ck.get_vector("pca.axis0"), ck.get_vector("pca.axis1")};
  m.pca.explained_variance = ck.get_vector("pca.explained_variance");
  m.svm.weight = ck.get_vector("svm.weight");
  m.svm.bias = ck.get_scalar("svm.bias");
  return m;
}

void save_freq_svm(const std::string& path, const FreqSvmModel& model,
                   const json& config_echo) {
  Checkpoint ck;
  ck.set_kind("freq_svm");
  json cfg = config_echo;
  cfg["modality"] = model.modality == FreqModality::kToF ? "tof" : "image";
  ck.set_config(cfg);
  ck.put_vector("svm.weight", model.svm.weight);
  ck.put_scalar("svm.bias", model.svm.bias);
  ck.save(path);
}

FreqSvmModel load_freq_svm(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.kind() != "freq_svm") throw std::runtime_error("expected freq_svm checkpoint");
  FreqSvmModel m;
  m.modality = ck.config().at("modality").get<std::string>() == "image"
                   ? FreqModality::kImage
                   : FreqModality::kToF;
  m.svm.weight = ck.get_vector("svm.weight");
  m.svm.bias = ck.get_scalar("svm.bias");
  return m;
}

}  // namespace mtof
