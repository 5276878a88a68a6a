#include <CLI11.hpp>

#include "gibbsnet/commands.hpp"

// gibbsnet: train a blocked-Gibbs transition operator adversarially, sample
// and inpaint with it, and verify its stationarity properties exactly on
// tabular models.

int main(int argc, char** argv) {
  CLI::App app{"GibbsNet trainer and diagnostics"};
  app.require_subcommand(1);

  std::string out_flag;
  std::vector<std::string> overrides;
  long seed_flag = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_flag, "output directory (default: $GIBBSNET_OUT or .)");
    cmd->add_option("--set", overrides, "config override key=value (repeatable)");
    cmd->add_option("--seed", seed_flag, "random seed")->each([&](const std::string&) {
      seed_given = true;
    });
  };

  // train
  auto* train = app.add_subcommand(
      "train", "Train from a flat key=value config; writes checkpoint.bin, records.jsonl "
               "(one JSON object per iteration) and manifest.json");
  std::string config_path, resume_path;
  train->add_option("--config", config_path, "key=value config file")->required();
  train->add_option("--resume", resume_path, "checkpoint to continue from");
  add_common(train);

  // sample
  auto* sample = app.add_subcommand(
      "sample", "Run the unclamped chain from a checkpoint. trajectory.csv columns: "
                "step,batch_index,x...,z...; for 2-D x also scatter_step_N.csv (x0,x1)");
  std::string ckpt_path;
  int steps = 20, count = 1000, probe_every = 1, image_rows = 0, image_cols = 0;
  sample->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  sample->add_option("--steps", steps, "chain steps");
  sample->add_option("--count", count, "parallel samples");
  sample->add_option("--probe-every", probe_every, "record every k-th step");
  sample->add_option("--image-rows", image_rows, "raster rows for PGM grids");
  sample->add_option("--image-cols", image_cols, "raster cols for PGM grids");
  add_common(sample);

  // inpaint
  auto* inpaint = app.add_subcommand(
      "inpaint", "Clamp observed coordinates and run the operator. Observations: CSV rows of "
                 "full-width x; mask: 1=observed, e.g. 1,0 or 10. trajectory.csv columns: "
                 "step,batch_index,x...,z...");
  std::string obs_path, mask_text;
  int inpaint_steps = 20;
  inpaint->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  inpaint->add_option("--observations", obs_path, "CSV of observed rows")->required();
  inpaint->add_option("--mask", mask_text, "per-dimension 0/1 mask")->required();
  inpaint->add_option("--steps", inpaint_steps, "chain steps");
  add_common(inpaint);

  // oracle
  auto* oracle = app.add_subcommand(
      "oracle", "Exact stationarity report for a tabular model (random consistent one by "
                "default); prints JSON with tv_x_marginal, tv_even_odd, max_conditional_dev");
  gibbsnet::OracleArgs oracle_args;
  oracle->add_option("--spec", oracle_args.spec_path,
                     "JSON file with p_x_given_z, q_z_given_x, data_dist");
  oracle->add_option("--nx", oracle_args.nx, "observed states for the random model");
  oracle->add_option("--nz", oracle_args.nz, "latent states for the random model");
  oracle->add_option("--perturb", oracle_args.perturb, "mix p with uniform by this weight");
  add_common(oracle);

  // eval
  auto* eval = app.add_subcommand(
      "eval", "Metric suite against a dataset config: MMD on the joint, histogram KL, mode "
              "coverage, long-chain stability, frozen-latent probe; writes metrics.jsonl");
  std::string eval_config;
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--config", eval_config, "dataset/eval config file")->required();
  add_common(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  gibbsnet::CommandContext ctx;
  ctx.out_dir = gibbsnet::resolve_out_dir(out_flag);
  ctx.overrides = overrides;
  if (seed_given) ctx.seed_flag = seed_flag;

  if (train->parsed()) return gibbsnet::cmd_train(config_path, ctx, resume_path);
  if (sample->parsed())
    return gibbsnet::cmd_sample(ckpt_path, steps, count, probe_every, image_rows, image_cols,
                                ctx);
  if (inpaint->parsed())
    return gibbsnet::cmd_inpaint(ckpt_path, obs_path, mask_text, inpaint_steps, ctx);
  if (oracle->parsed()) return gibbsnet::cmd_oracle(oracle_args, ctx);
  if (eval->parsed()) return gibbsnet::cmd_eval(ckpt_path, eval_config, ctx);
  return 2;
}
