#include "gibbsnet/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gibbsnet/checkpoint.hpp"
#include "gibbsnet/config.hpp"
#include "gibbsnet/io.hpp"
#include "gibbsnet/tabular.hpp"

namespace gibbsnet {
namespace {

namespace fs = std::filesystem;

// Accumulates run facts and guarantees a manifest lands on disk exactly once,
// whether the command succeeds or throws.
class Manifest {
 public:
  Manifest(const std::string& out_dir, const std::string& command) : dir_(out_dir) {
    fs::create_directories(dir_);
    j_["command"] = command;
    j_["outputs"] = nlohmann::json::array();
  }

  ~Manifest() {
    if (!written_) write("error", "run aborted before completion");
  }

  void set_config(const ConfigMap& map) {
    nlohmann::json cfg = nlohmann::json::object();
    std::istringstream in(map.canonical_text());
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 1);
    }
    j_["config"] = cfg;
    j_["config_hash"] = hex64(map.hash());
  }

  void set(const std::string& key, const nlohmann::json& value) { j_[key] = value; }

  std::string add_output(const std::string& name) {
    const std::string path = (fs::path(dir_) / name).string();
    j_["outputs"].push_back(path);
    return path;
  }

  void finish_ok() { write("ok", ""); }

  int finish_error(const std::exception& e) {
    const int code = exit_code_for(e);
    j_["exit_code"] = code;
    write("error", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return code;
  }

 private:
  void write(const std::string& status, const std::string& error) {
    j_["status"] = status;
    if (!error.empty()) j_["error"] = error;
    std::ofstream out(fs::path(dir_) / "manifest.json");
    out << j_.dump(2) << "\n";
    written_ = true;
  }

  std::string dir_;
  nlohmann::json j_;
  bool written_ = false;
};

nlohmann::json record_to_json(const TrainRecord& rec) {
  nlohmann::json j;
  j["iteration"] = rec.iteration;
  j["disc_loss"] = rec.disc_loss;
  j["gen_loss"] = rec.gen_loss;
  j["wall_time_s"] = rec.wall_time_s;
  if (!rec.metrics.empty()) j["metrics"] = rec.metrics;
  return j;
}

ConfigMap load_config(const std::string& path, const CommandContext& ctx) {
  ConfigMap map = ConfigMap::from_file(path);
  for (const std::string& o : ctx.overrides) map.apply_override(o);
  if (ctx.seed_flag) map.set("seed", std::to_string(*ctx.seed_flag));
  return map;
}

std::vector<bool> parse_mask(const std::string& text) {
  std::vector<bool> mask;
  const bool comma = text.find(',') != std::string::npos;
  if (comma) {
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
      if (cell == "1" || cell == "true")
        mask.push_back(true);
      else if (cell == "0" || cell == "false")
        mask.push_back(false);
      else
        throw ConfigError("inpaint: mask entry '" + cell + "' is not 0/1");
    }
  } else {
    for (char c : text) {
      if (c == '1')
        mask.push_back(true);
      else if (c == '0')
        mask.push_back(false);
      else
        throw ConfigError("inpaint: mask character '" + std::string(1, c) + "' is not 0/1");
    }
  }
  if (mask.empty()) throw ConfigError("inpaint: empty mask");
  return mask;
}

Matrix joint_features(const Matrix& x, const Matrix& z) {
  Matrix j(x.rows(), x.cols() + z.cols());
  j << x, z;
  return j;
}

}  // namespace

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("GIBBSNET_OUT"); env && *env) return env;
  return ".";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const TrainingDivergedError*>(&e)) return 3;
  if (dynamic_cast<const CorruptError*>(&e)) return 4;
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const FormatError*>(&e)) return 2;
  if (dynamic_cast<const DimensionError*>(&e)) return 2;
  if (dynamic_cast<const ContractError*>(&e)) return 2;
  return 1;
}

int cmd_train(const std::string& config_path, const CommandContext& ctx,
              const std::string& resume_path) {
  Manifest manifest(ctx.out_dir, "train");
  try {
    ConfigMap map = load_config(config_path, ctx);
    TrainConfig cfg = train_config_from(map);
    DatasetSpec dspec = dataset_spec_from(map, cfg.seed);
    const long checkpoint_every = map.get_long("checkpoint_every", 0);
    map.reject_unknown();

    Dataset data = dspec.build();
    if (data.dim() != cfg.dim_x)
      throw ConfigError("train: dataset dim " + std::to_string(data.dim()) +
                        " != config key 'dim_x' = " + std::to_string(cfg.dim_x));
    if (cfg.label_modeling && cfg.n_labels == 0) cfg.n_labels = data.n_classes;
    cfg.validate();

    manifest.set_config(map);
    manifest.set("seed", cfg.seed);
    manifest.set("ali_mode", cfg.n_steps == 1);

    const std::uint64_t identity = map.hash_excluding(ConfigMap::resume_neutral_keys());
    TrainerState state;
    if (!resume_path.empty()) {
      LoadedCheckpoint loaded = load_checkpoint(resume_path);
      if (loaded.config_hash != identity)
        throw ConfigError("train: resume checkpoint was written by a different config (" +
                          hex64(loaded.config_hash) + " vs " + hex64(identity) + ")");
      state = std::move(loaded.state);
    } else {
      state = init_trainer(cfg);
    }

    const std::string records_path = manifest.add_output("records.jsonl");
    std::ofstream records(records_path);
    if (!records) throw FormatError("train: cannot open " + records_path);

    std::string last_checkpoint;
    auto sink = [&](const TrainerState& st, const TrainRecord& rec) {
      records << record_to_json(rec).dump() << "\n";
      if (checkpoint_every > 0 && st.iteration % checkpoint_every == 0 &&
          st.iteration < cfg.total_iterations) {
        const std::string name = "checkpoint_iter_" + std::to_string(st.iteration) + ".bin";
        const std::string path = manifest.add_output(name);
        save_checkpoint(path, st, identity);
        last_checkpoint = path;
      }
    };

    try {
      train(state, data, cfg, sink);
    } catch (const TrainingDivergedError& e) {
      manifest.set("last_good_checkpoint", last_checkpoint);
      throw;
    }

    const std::string ckpt_path = manifest.add_output("checkpoint.bin");
    save_checkpoint(ckpt_path, state, identity);
    manifest.set("checkpoint_hash", hex64(hash_file(ckpt_path)));
    manifest.set("iterations", state.iteration);
    manifest.finish_ok();
    return 0;
  } catch (const std::exception& e) {
    return manifest.finish_error(e);
  }
}

int cmd_sample(const std::string& checkpoint_path, int steps, int count, int probe_every,
               int image_rows, int image_cols, const CommandContext& ctx) {
  Manifest manifest(ctx.out_dir, "sample");
  try {
    if (steps < 1) throw ConfigError("sample: steps must be >= 1, got " + std::to_string(steps));
    if (count < 1) throw ConfigError("sample: count must be >= 1, got " + std::to_string(count));
    if (probe_every < 1) throw ConfigError("sample: probe-every must be >= 1");

    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const std::uint64_t seed =
        ctx.seed_flag ? static_cast<std::uint64_t>(*ctx.seed_flag) : 0;
    manifest.set("seed", seed);
    manifest.set("checkpoint", checkpoint_path);
    manifest.set("checkpoint_hash", hex64(hash_file(checkpoint_path)));

    ChainOptions opt;
    opt.record_every = probe_every;
    RandomStream rng(mix_seed(seed, 0x5a3e));
    auto chain = unclamped_chain(as_constants(loaded.state.nets.enc),
                                 as_constants(loaded.state.nets.dec), steps, count, rng, opt);

    write_trajectory_csv(manifest.add_output("trajectory.csv"), chain.trajectory);

    const Eigen::Index dim_x = chain.trajectory.front().x.cols();
    if (dim_x == 2) {
      for (const ChainState& state : chain.trajectory) {
        const std::string name = "scatter_step_" + std::to_string(state.step) + ".csv";
        write_csv(manifest.add_output(name), state.x, {"x0", "x1"});
      }
    }
    if (image_rows > 0 && image_cols > 0) {
      if (static_cast<Eigen::Index>(image_rows) * image_cols != dim_x)
        throw ConfigError("sample: image dims " + std::to_string(image_rows) + "x" +
                          std::to_string(image_cols) + " do not match dim_x " +
                          std::to_string(dim_x));
      const int grid = std::max(1, static_cast<int>(std::lround(std::sqrt(count))));
      write_pgm_grid(manifest.add_output("samples_final.pgm"), chain.pair.x.value, image_rows,
                     image_cols, grid);
    }
    manifest.finish_ok();
    return 0;
  } catch (const std::exception& e) {
    return manifest.finish_error(e);
  }
}

int cmd_inpaint(const std::string& checkpoint_path, const std::string& observations_csv,
                const std::string& mask_text, int steps, const CommandContext& ctx) {
  Manifest manifest(ctx.out_dir, "inpaint");
  try {
    if (steps < 1) throw ConfigError("inpaint: steps must be >= 1");
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const Matrix x_obs = read_csv(observations_csv);
    const std::vector<bool> mask = parse_mask(mask_text);
    if (static_cast<Eigen::Index>(mask.size()) != x_obs.cols())
      throw ConfigError("inpaint: mask width " + std::to_string(mask.size()) +
                        " != observation width " + std::to_string(x_obs.cols()));

    const std::uint64_t seed =
        ctx.seed_flag ? static_cast<std::uint64_t>(*ctx.seed_flag) : 0;
    manifest.set("seed", seed);
    manifest.set("checkpoint_hash", hex64(hash_file(checkpoint_path)));

    auto trajectory = inpaint_chain(loaded.state.nets.enc, loaded.state.nets.dec, x_obs, mask,
                                    steps, seed);
    write_trajectory_csv(manifest.add_output("trajectory.csv"), trajectory);
    manifest.finish_ok();
    return 0;
  } catch (const std::exception& e) {
    return manifest.finish_error(e);
  }
}

int cmd_oracle(const OracleArgs& args, const CommandContext& ctx) {
  Manifest manifest(ctx.out_dir, "oracle");
  try {
    const std::uint64_t seed =
        ctx.seed_flag ? static_cast<std::uint64_t>(*ctx.seed_flag) : 0;
    TabularModel model;
    if (!args.spec_path.empty()) {
      std::ifstream in(args.spec_path);
      if (!in) throw ConfigError("oracle: cannot open spec " + args.spec_path);
      nlohmann::json spec = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
      if (spec.is_discarded()) throw FormatError("oracle: spec is not valid JSON");
      auto to_matrix = [](const nlohmann::json& rows) {
        Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        return m;
      };
      model.p_x_given_z = to_matrix(spec.at("p_x_given_z"));
      model.q_z_given_x = to_matrix(spec.at("q_z_given_x"));
      const auto& dd = spec.at("data_dist");
      model.data_dist.resize(static_cast<Eigen::Index>(dd.size()));
      for (std::size_t i = 0; i < dd.size(); ++i)
        model.data_dist(static_cast<Eigen::Index>(i)) = dd[i];
    } else {
      if (args.nx < 1 || args.nz < 1)
        throw ConfigError("oracle: nx and nz must be positive");
      model = consistent_tabular_model(args.nx, args.nz, seed);
      if (args.perturb > 0.0) model = perturb_p_uniform(model, args.perturb);
    }

    try {
      model.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("oracle: spec rejected: ") + e.what());
    }

    Prop1Report report = check_proposition1(model);
    nlohmann::json j;
    j["n_x"] = model.n_x();
    j["n_z"] = model.n_z();
    j["seed"] = seed;
    j["perturb"] = args.perturb;
    j["tv_x_marginal"] = report.tv_x_marginal;
    j["tv_even_odd"] = report.tv_even_odd;
    j["max_conditional_dev"] = report.max_conditional_dev;
    std::cout << j.dump(2) << "\n";
    std::ofstream out(manifest.add_output("oracle_report.json"));
    out << j.dump(2) << "\n";
    manifest.set("seed", seed);
    manifest.finish_ok();
    return 0;
  } catch (const std::exception& e) {
    return manifest.finish_error(e);
  }
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             const CommandContext& ctx) {
  Manifest manifest(ctx.out_dir, "eval");
  try {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    ConfigMap map = load_config(config_path, ctx);
    const std::uint64_t seed = static_cast<std::uint64_t>(map.get_long("seed", 0));
    DatasetSpec dspec = dataset_spec_from(map, seed);
    const int eval_steps = static_cast<int>(map.get_long("eval_steps", 20));
    const Eigen::Index eval_samples = map.get_long("eval_samples", 2000);
    const int chain_steps = static_cast<int>(map.get_long("chain_steps", 2000));
    const int probe_every = static_cast<int>(map.get_long("chain_probe_every", 100));
    const int kl_bins = static_cast<int>(map.get_long("kl_bins", 30));
    // trainer keys may share the config file; consume them quietly
    train_config_from(map);
    map.get_long("checkpoint_every", 0);
    map.reject_unknown();

    Dataset data = dspec.build();
    const NetParams& enc = loaded.state.nets.enc;
    const NetParams& dec = loaded.state.nets.dec;
    if (enc.in_dim() != data.dim())
      throw ConfigError("eval: checkpoint expects dim_x " + std::to_string(enc.in_dim()) +
                        " but dataset has dim " + std::to_string(data.dim()));

    manifest.set_config(map);
    manifest.set("seed", seed);
    manifest.set("checkpoint_hash", hex64(hash_file(checkpoint_path)));

    std::vector<MetricReport> reports;
    RandomStream rng(mix_seed(seed, 0xeba1));

    // unclamped joint at eval_steps vs the data-clamped joint
    ChainOptions opt;
    auto chain =
        unclamped_chain(as_constants(enc), as_constants(dec), eval_steps,
                        std::min<Eigen::Index>(eval_samples, 512), rng, opt);
    const Eigen::Index n_ref = chain.pair.x.rows();
    Matrix x_ref(n_ref, data.dim());
    for (Eigen::Index i = 0; i < n_ref; ++i) x_ref.row(i) = data.x.row(rng.index(data.size()));
    Matrix z_ref = encode(as_constants(enc), Tensor(x_ref), rng).z.value;
    MetricReport mmd = mmd_rbf(joint_features(chain.pair.x.value, chain.pair.z.value),
                               joint_features(x_ref, z_ref));
    mmd.seed = seed;
    reports.push_back(mmd);

    // per-dimension histogram divergence between generated and data marginals
    {
      double kl_sum = 0.0;
      MetricReport kl_report;
      kl_report.name = "histogram_kl";
      for (Eigen::Index d = 0; d < data.dim(); ++d) {
        const double lo = data.x.col(d).minCoeff() - 0.5;
        const double hi = data.x.col(d).maxCoeff() + 0.5;
        auto kl = histogram_kl(chain.pair.x.value.col(d), x_ref.col(d), kl_bins, lo, hi);
        kl_report.details["dim_" + std::to_string(d)] = kl.value;
        kl_sum += kl.value;
      }
      kl_report.value = kl_sum / static_cast<double>(data.dim());
      kl_report.n_samples = n_ref;
      kl_report.seed = seed;
      reports.push_back(kl_report);
    }

    const auto* meta = std::get_if<MixtureMeta>(&data.meta);
    if (meta) {
      auto big = unclamped_chain(as_constants(enc), as_constants(dec), eval_steps, eval_samples,
                                 rng, opt);
      MetricReport cov = mode_coverage(big.pair.x.value, *meta);
      cov.seed = seed;
      reports.push_back(cov);

      StabilityConfig stab;
      stab.steps = chain_steps;
      stab.probe_every = probe_every;
      stab.batch = std::min<Eigen::Index>(eval_samples, 512);
      stab.seed = seed;
      auto series = long_chain_stability(enc, dec, stab, *meta, data.x);
      reports.insert(reports.end(), series.begin(), series.end());
    }

    if (data.labeled) {
      Matrix latents = encode(as_constants(enc), Tensor(data.x), rng).z.value;
      const Eigen::Index split = data.size() * 4 / 5;
      std::vector<int> train_y(data.y.begin(), data.y.begin() + split);
      std::vector<int> test_y(data.y.begin() + split, data.y.end());
      ProbeConfig pc;
      pc.seed = seed;
      MetricReport probe = linear_probe(latents.topRows(split), train_y,
                                        latents.bottomRows(data.size() - split), test_y, pc);
      reports.push_back(probe);
    }

    write_metrics_jsonl(manifest.add_output("metrics.jsonl"), reports);
    manifest.finish_ok();
    return 0;
  } catch (const std::exception& e) {
    return manifest.finish_error(e);
  }
}

}  // namespace gibbsnet
