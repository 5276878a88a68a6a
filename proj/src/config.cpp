#include "gibbsnet/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "gibbsnet/checkpoint.hpp"

namespace gibbsnet {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path);
}

ConfigMap ConfigMap::from_text(const std::string& text, const std::string& origin) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + origin + ":" + std::to_string(line_no) +
                        " is not key=value: '" + line + "'");
    map.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return map;
}

void ConfigMap::apply_override(const std::string& keyval) {
  const auto eq = keyval.find('=');
  if (eq == std::string::npos)
    throw ConfigError("config: override is not key=value: '" + keyval + "'");
  set(trim(keyval.substr(0, eq)), trim(keyval.substr(eq + 1)));
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("config: empty key");
  entries_.emplace_back(key, value);
}

bool ConfigMap::has(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

std::optional<std::string> ConfigMap::lookup(const std::string& key) {
  consumed_.insert(key);
  std::optional<std::string> found;
  for (const auto& [k, v] : entries_)
    if (k == key) found = v;  // last wins
  return found;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) {
  return lookup(key).value_or(fallback);
}

long ConfigMap::get_long(const std::string& key, long fallback) {
  const auto v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    const long parsed = std::stol(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("trailing");
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has invalid integer value '" + *v + "'");
  }
}

double ConfigMap::get_double(const std::string& key, double fallback) {
  const auto v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    const double parsed = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("trailing");
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has invalid numeric value '" + *v + "'");
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
  const auto v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config: key '" + key + "' has invalid boolean value '" + *v + "'");
}

std::vector<Eigen::Index> ConfigMap::get_sizes(const std::string& key,
                                               const std::vector<Eigen::Index>& fallback) {
  const auto v = lookup(key);
  if (!v) return fallback;
  std::vector<Eigen::Index> sizes;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      sizes.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' has invalid size list '" + *v + "'");
    }
  }
  if (sizes.empty())
    throw ConfigError("config: key '" + key + "' has empty size list");
  return sizes;
}

void ConfigMap::reject_unknown() const {
  for (const auto& [k, v] : entries_)
    if (!consumed_.count(k)) throw ConfigError("config: unknown key '" + k + "'");
}

std::string ConfigMap::canonical_text() const {
  std::map<std::string, std::string> last;
  for (const auto& [k, v] : entries_) last[k] = v;
  std::string text;
  for (const auto& [k, v] : last) text += k + "=" + v + "\n";
  return text;
}

std::uint64_t ConfigMap::hash() const {
  const std::string text = canonical_text();
  return fnv1a64(text.data(), text.size());
}

std::uint64_t ConfigMap::hash_excluding(const std::vector<std::string>& keys) const {
  std::map<std::string, std::string> last;
  for (const auto& [k, v] : entries_) last[k] = v;
  for (const std::string& k : keys) last.erase(k);
  std::string text;
  for (const auto& [k, v] : last) text += k + "=" + v + "\n";
  return fnv1a64(text.data(), text.size());
}

const std::vector<std::string>& ConfigMap::resume_neutral_keys() {
  static const std::vector<std::string> keys = {"total_iterations", "eval_every",
                                                "checkpoint_every"};
  return keys;
}

Dataset DatasetSpec::build() const {
  if (kind == "gaussian_mixture")
    return gaussian_mixture(modes, n_samples, radius, sigma, seed, labeled, phase);
  if (kind == "two_moons") return two_moons(n_samples, noise, seed);
  if (kind == "swiss_roll") return swiss_roll_2d(n_samples, noise, seed);
  if (kind == "idx") {
    if (idx_path.empty()) throw ConfigError("config: dataset=idx requires idx_path");
    return load_idx_images(idx_path, idx_limit);
  }
  throw ConfigError("config: unknown dataset '" + kind + "'");
}

TrainConfig train_config_from(ConfigMap& map) {
  TrainConfig cfg;
  cfg.n_steps = static_cast<int>(map.get_long("n_steps", cfg.n_steps));
  cfg.dim_x = map.get_long("dim_x", cfg.dim_x);
  cfg.dim_z = map.get_long("dim_z", cfg.dim_z);
  cfg.enc_hidden = map.get_sizes("enc_hidden", cfg.enc_hidden);
  cfg.dec_hidden = map.get_sizes("dec_hidden", cfg.dec_hidden);
  cfg.disc_hidden = map.get_sizes("disc_hidden", cfg.disc_hidden);

  const std::string gen_loss = map.get_string("generator_loss", "boundary_seeking");
  if (gen_loss == "boundary_seeking")
    cfg.loss.generator_loss = GeneratorLoss::boundary_seeking;
  else if (gen_loss == "non_saturating")
    cfg.loss.generator_loss = GeneratorLoss::non_saturating;
  else
    throw ConfigError("config: key 'generator_loss' has invalid value '" + gen_loss + "'");

  const std::string label_loss = map.get_string("label_loss", "expected_softmax");
  if (label_loss == "expected_softmax")
    cfg.loss.label_loss = LabelLoss::expected_softmax;
  else if (label_loss == "importance_weighted")
    cfg.loss.label_loss = LabelLoss::importance_weighted;
  else
    throw ConfigError("config: key 'label_loss' has invalid value '" + label_loss + "'");

  cfg.loss.disc_steps_per_gen_step =
      static_cast<int>(map.get_long("disc_steps_per_gen_step", 1));
  cfg.lr = map.get_double("lr", cfg.lr);
  cfg.lr_disc = map.get_double("lr_disc", cfg.lr_disc);
  cfg.beta1 = map.get_double("beta1", cfg.beta1);
  cfg.beta2 = map.get_double("beta2", cfg.beta2);
  cfg.adam_eps = map.get_double("adam_eps", cfg.adam_eps);
  cfg.batch = map.get_long("batch", cfg.batch);
  cfg.total_iterations = map.get_long("total_iterations", cfg.total_iterations);
  cfg.eval_every = map.get_long("eval_every", cfg.eval_every);
  cfg.seed = static_cast<std::uint64_t>(map.get_long("seed", 0));
  cfg.decoder_stochastic = map.get_bool("decoder_stochastic", cfg.decoder_stochastic);
  cfg.log_var_min = map.get_double("log_var_min", cfg.log_var_min);
  cfg.log_var_max = map.get_double("log_var_max", cfg.log_var_max);
  cfg.label_modeling = map.get_bool("label_modeling", cfg.label_modeling);
  cfg.n_labels = static_cast<int>(map.get_long("n_labels", cfg.n_labels));
  cfg.iw_label_samples = static_cast<int>(map.get_long("iw_label_samples", cfg.iw_label_samples));
  cfg.shared_batches = map.get_bool("shared_batches", cfg.shared_batches);
  return cfg;
}

DatasetSpec dataset_spec_from(ConfigMap& map, std::uint64_t default_seed) {
  DatasetSpec spec;
  spec.kind = map.get_string("dataset", spec.kind);
  spec.modes = static_cast<int>(map.get_long("modes", spec.modes));
  spec.n_samples = static_cast<int>(map.get_long("n_samples", spec.n_samples));
  spec.radius = map.get_double("radius", spec.radius);
  spec.sigma = map.get_double("sigma", spec.sigma);
  spec.phase = map.get_double("mixture_phase", spec.phase);
  spec.noise = map.get_double("noise", spec.noise);
  spec.labeled = map.get_bool("labeled", spec.labeled);
  spec.idx_path = map.get_string("idx_path", spec.idx_path);
  spec.idx_limit = static_cast<int>(map.get_long("idx_limit", spec.idx_limit));
  spec.seed = static_cast<std::uint64_t>(
      map.get_long("data_seed", static_cast<long>(mix_seed(default_seed, 0xda7a))));
  return spec;
}

}  // namespace gibbsnet
