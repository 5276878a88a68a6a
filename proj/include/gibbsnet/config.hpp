#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gibbsnet/data.hpp"
#include "gibbsnet/trainer.hpp"

// Flat key=value run configuration ('#' starts a comment). Keys are consumed
// as they are read; anything left over is an unknown key and rejected, so
// typos fail loudly.

namespace gibbsnet {

class ConfigMap {
 public:
  static ConfigMap from_file(const std::string& path);
  static ConfigMap from_text(const std::string& text, const std::string& origin = "<text>");

  // "key=value" command-line override; later values win
  void apply_override(const std::string& keyval);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  long get_long(const std::string& key, long fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<Eigen::Index> get_sizes(const std::string& key,
                                      const std::vector<Eigen::Index>& fallback);

  // throws ConfigError naming the first key nobody consumed
  void reject_unknown() const;

  // sorted "key=value" lines of every entry; stable across override order
  std::string canonical_text() const;
  std::uint64_t hash() const;
  // hash with some keys dropped; checkpoints use this so a resumed run may
  // extend total_iterations without changing identity
  std::uint64_t hash_excluding(const std::vector<std::string>& keys) const;

  // keys that do not affect the training trajectory up to a given iteration
  static const std::vector<std::string>& resume_neutral_keys();

 private:
  std::optional<std::string> lookup(const std::string& key);
  std::vector<std::pair<std::string, std::string>> entries_;
  std::set<std::string> consumed_;
};

struct DatasetSpec {
  std::string kind = "gaussian_mixture";  // gaussian_mixture | two_moons | swiss_roll | idx
  int modes = 8;
  int n_samples = 10000;
  double radius = 2.0;
  double sigma = 0.2;
  double phase = 0.0;
  double noise = 0.05;
  bool labeled = false;
  std::string idx_path;
  int idx_limit = 0;
  std::uint64_t seed = 0;

  Dataset build() const;
};

// Reads the trainer keys out of the map (defaults match TrainConfig).
TrainConfig train_config_from(ConfigMap& map);
// Reads the dataset keys; default_seed applies when data_seed is absent.
DatasetSpec dataset_spec_from(ConfigMap& map, std::uint64_t default_seed);

}  // namespace gibbsnet
