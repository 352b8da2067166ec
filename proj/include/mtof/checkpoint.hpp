#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtof/baselines.hpp"
#include "mtof/representation.hpp"
#include "mtof/spoof_classifier.hpp"

namespace mtof {

// Bit-exact binary<->text round trip for parameter blobs.
std::string base64_encode(const std::vector<double>& data);
std::vector<double> base64_decode_doubles(const std::string& text);

// Self-describing checkpoint container: config echo, named parameter blobs,
// epoch counter and RNG state. One format shared by all models.
class Checkpoint {
 public:
  Checkpoint() = default;

  void set_kind(const std::string& kind) { meta_["kind"] = kind; }
  std::string kind() const { return meta_.value("kind", ""); }
  void set_config(const nlohmann::json& cfg) { meta_["config"] = cfg; }
  nlohmann::json config() const { return meta_.value("config", nlohmann::json::object()); }
  void set_epoch(int epoch) { meta_["epoch"] = epoch; }
  int epoch() const { return meta_.value("epoch", 0); }
  void set_rng_state(std::uint64_t s) { meta_["rng_state"] = s; }
  std::uint64_t rng_state() const { return meta_.value("rng_state", 0ULL); }

  void put_tensor(const std::string& name, const Tensor& t);
  Tensor get_tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;

  void put_vector(const std::string& name, const std::vector<double>& v);
  std::vector<double> get_vector(const std::string& name) const;

  void put_scalar(const std::string& name, double v) { meta_["scalars"][name] = v; }
  double get_scalar(const std::string& name) const { return meta_.at("scalars").at(name); }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  nlohmann::json meta_ = {{"magic", "mtof-checkpoint"}, {"schema_version", 1}};
};

// mtofnet (representation network + spoof classifier)
void save_mtofnet(const std::string& path, RepNet& net, SpoofClassifier& clf,
                  const nlohmann::json& config_echo, int epoch, std::uint64_t rng_state);

struct MtofnetBundle {
  std::unique_ptr<RepNet> repnet;
  std::unique_ptr<SpoofClassifier> classifier;
  nlohmann::json config;
  int epoch = 0;
};
MtofnetBundle load_mtofnet(const std::string& path);

// Baselines share the same container.
void save_naive_cnn(const std::string& path, NaiveCnnModel& model,
                    const nlohmann::json& config_echo);
std::unique_ptr<NaiveCnnModel> load_naive_cnn(const std::string& path);

void save_pca_svm(const std::string& path, const PcaSvmModel& model,
                  const nlohmann::json& config_echo);
PcaSvmModel load_pca_svm(const std::string& path);

void save_freq_svm(const std::string& path, const FreqSvmModel& model,
                   const nlohmann::json& config_echo);
FreqSvmModel load_freq_svm(const std::string& path);

}  // namespace mtof
