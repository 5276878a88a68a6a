#include "gibbsnet/trainer.hpp"

#include <chrono>
#include <cmath>

#include "gibbsnet/eval.hpp"

namespace gibbsnet {
namespace {

enum Purpose : std::uint64_t { kBatch = 1, kDiscPhase = 2, kGenPhase = 3, kInitNets = 4 };

RandomStream stream_for(const TrainConfig& cfg, long iteration, Purpose purpose,
                        std::uint64_t sub = 0) {
  return RandomStream(mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration) + 1,
                               static_cast<std::uint64_t>(purpose), sub));
}

void require_finite(double loss, const char* phase, long iteration) {
  if (!std::isfinite(loss))
    throw TrainingDivergedError(std::string(phase) + " loss is non-finite at iteration " +
                                    std::to_string(iteration),
                                iteration);
}

struct BatchDraw {
  Matrix x;
  std::vector<int> y;
};

BatchDraw draw_batch(const Dataset& data, const TrainConfig& cfg, long iteration,
                     std::uint64_t sub) {
  RandomStream rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration) + 1, kBatch, sub));
  BatchDraw b;
  b.x.resize(cfg.batch, data.dim());
  const bool want_labels = cfg.label_modeling && data.labeled;
  if (want_labels) b.y.resize(static_cast<std::size_t>(cfg.batch));
  for (Eigen::Index i = 0; i < cfg.batch; ++i) {
    const Eigen::Index idx = rng.index(data.size());
    b.x.row(i) = data.x.row(idx);
    if (want_labels) b.y[static_cast<std::size_t>(i)] = data.y[static_cast<std::size_t>(idx)];
  }
  return b;
}

std::optional<Tensor> clamped_label_features(const TrainConfig& cfg,
                                             const std::vector<int>& y_batch) {
  if (!cfg.label_modeling) return std::nullopt;
  return Tensor(one_hot(y_batch, cfg.n_labels));
}

}  // namespace

void TrainConfig::validate() const {
  if (n_steps < 1) throw ConfigError("n_steps must be >= 1, got " + std::to_string(n_steps));
  if (dim_x < 1 || dim_z < 1) throw ConfigError("dim_x and dim_z must be positive");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (total_iterations < 1) throw ConfigError("total_iterations must be >= 1");
  if (loss.disc_steps_per_gen_step < 1)
    throw ConfigError("disc_steps_per_gen_step must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (label_modeling && n_labels < 2)
    throw ConfigError("label_modeling needs n_labels >= 2, got " + std::to_string(n_labels));
  if (label_modeling && iw_label_samples < 2)
    throw ConfigError("iw_label_samples must be >= 2");
  if (!(log_var_min < log_var_max))
    throw ConfigError("log_var_min must be below log_var_max");
  for (const auto& widths : {enc_hidden, dec_hidden, disc_hidden})
    for (Eigen::Index w : widths)
      if (w < 1) throw ConfigError("hidden widths must be positive");
}

std::vector<Eigen::Index> TrainConfig::enc_sizes() const {
  std::vector<Eigen::Index> s{dim_x};
  s.insert(s.end(), enc_hidden.begin(), enc_hidden.end());
  s.push_back(2 * dim_z);
  return s;
}

std::vector<Eigen::Index> TrainConfig::dec_sizes() const {
  std::vector<Eigen::Index> s{dim_z};
  s.insert(s.end(), dec_hidden.begin(), dec_hidden.end());
  s.push_back(2 * dim_x);
  return s;
}

std::vector<Eigen::Index> TrainConfig::disc_sizes() const {
  std::vector<Eigen::Index> s{dim_x + dim_z + (label_modeling ? n_labels : 0)};
  s.insert(s.end(), disc_hidden.begin(), disc_hidden.end());
  s.push_back(1);
  return s;
}

TrainerState init_trainer(const TrainConfig& cfg) {
  cfg.validate();
  TrainerState st;
  st.nets.enc = init_params(cfg.enc_sizes(), mix_seed(cfg.seed, kInitNets, 1), Role::encoder, 0,
                            cfg.log_var_min, cfg.log_var_max);
  st.nets.dec = init_params(cfg.dec_sizes(), mix_seed(cfg.seed, kInitNets, 2), Role::decoder,
                            cfg.label_modeling ? cfg.n_labels : 0, cfg.log_var_min,
                            cfg.log_var_max);
  st.nets.disc =
      init_params(cfg.disc_sizes(), mix_seed(cfg.seed, kInitNets, 3), Role::discriminator);

  AdamConfig opt{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps};
  AdamConfig opt_d = opt;
  if (cfg.lr_disc > 0.0) opt_d.lr = cfg.lr_disc;
  st.opt_enc = AdamState::init(param_refs(static_cast<const NetParams&>(st.nets.enc)), opt);
  st.opt_dec = AdamState::init(param_refs(static_cast<const NetParams&>(st.nets.dec)), opt);
  st.opt_disc = AdamState::init(param_refs(static_cast<const NetParams&>(st.nets.disc)), opt_d);
  return st;
}

double disc_update(TrainerState& st, const Matrix& x_batch, const std::vector<int>& y_batch,
                   const TrainConfig& cfg, int substep) {
  RandomStream rng = stream_for(cfg, st.iteration, kDiscPhase, static_cast<std::uint64_t>(substep));
  Tape tape;
  NetVars disc = register_leaves(tape, st.nets.disc);
  const NetVars enc = as_constants(st.nets.enc);
  const NetVars dec = as_constants(st.nets.dec);

  ChainOptions opt;
  opt.decoder_stochastic = cfg.decoder_stochastic;
  opt.label_modeling = cfg.label_modeling;
  auto chain = unclamped_chain(enc, dec, cfg.n_steps, cfg.batch, rng, opt);
  auto clamped = clamped_step(enc, x_batch, rng);

  Tensor d_real = discriminate(disc, clamped.x, clamped.z, clamped_label_features(cfg, y_batch));
  Tensor d_fake = discriminate(disc, chain.pair.x, chain.pair.z, chain.pair.y_features);
  Tensor loss = disc_loss(d_real, d_fake);
  require_finite(loss.scalar(), "discriminator", st.iteration);

  tape.backward(loss);
  adam_step(param_refs(st.nets.disc), net_grads(tape, disc), st.opt_disc);
  return loss.scalar();
}

double gen_update(TrainerState& st, const Matrix& x_batch, const std::vector<int>& y_batch,
                  const TrainConfig& cfg) {
  RandomStream rng = stream_for(cfg, st.iteration, kGenPhase);
  Tape tape;
  NetVars enc = register_leaves(tape, st.nets.enc);
  NetVars dec = register_leaves(tape, st.nets.dec);
  const NetVars disc = as_constants(st.nets.disc);

  ChainOptions opt;
  opt.decoder_stochastic = cfg.decoder_stochastic;
  opt.label_modeling = cfg.label_modeling;
  auto chain = unclamped_chain(enc, dec, cfg.n_steps, cfg.batch, rng, opt);
  auto clamped = clamped_step(enc, x_batch, rng);

  const bool iw_labels =
      cfg.label_modeling && cfg.loss.label_loss == LabelLoss::importance_weighted;
  std::optional<Tensor> y_fake = chain.pair.y_features;
  if (iw_labels && y_fake) y_fake = detach(*y_fake);  // logits learn via the IW loss below

  Tensor d_fake = discriminate(disc, chain.pair.x, chain.pair.z, y_fake);
  Tensor d_real = discriminate(disc, clamped.x, clamped.z, clamped_label_features(cfg, y_batch));
  Tensor loss = add(gen_loss(d_fake, cfg.loss.generator_loss),
                    clamped_fool_loss(d_real, cfg.loss.generator_loss));

  if (iw_labels) {
    const Matrix logits = chain.label_logits->value;
    const Eigen::Index m_samples = cfg.iw_label_samples;
    std::vector<std::vector<int>> labels(static_cast<std::size_t>(cfg.batch));
    Matrix d_values(cfg.batch, m_samples);
    const Tensor x_const = detach(chain.pair.x);
    const Tensor z_const = detach(chain.pair.z);
    for (Eigen::Index m = 0; m < m_samples; ++m) {
      std::vector<int> drawn = sample_labels(logits, rng);
      Tensor d_m = discriminate(disc, x_const, z_const, Tensor(one_hot(drawn, cfg.n_labels)));
      for (Eigen::Index i = 0; i < cfg.batch; ++i) {
        labels[static_cast<std::size_t>(i)].push_back(drawn[static_cast<std::size_t>(i)]);
        d_values(i, m) = d_m.value(i, 0);
      }
    }
    loss = add(loss, importance_weighted_label_loss(*chain.label_logits, labels, d_values));
  }

  require_finite(loss.scalar(), "generator", st.iteration);
  tape.backward(loss);
  adam_step(param_refs(st.nets.enc), net_grads(tape, enc), st.opt_enc);
  adam_step(param_refs(st.nets.dec), net_grads(tape, dec), st.opt_dec);
  return loss.scalar();
}

namespace {

TrainRecord finish_record(TrainerState& st, const Dataset& data, const TrainConfig& cfg,
                          double d_loss, double g_loss,
                          std::chrono::steady_clock::time_point t0) {
  TrainRecord rec;
  rec.iteration = st.iteration;
  rec.disc_loss = d_loss;
  rec.gen_loss = g_loss;

  if (cfg.eval_every > 0 && (st.iteration + 1) % cfg.eval_every == 0) {
    RandomStream rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(st.iteration) + 1, 0xe7a1));
    ChainOptions opt;
    opt.decoder_stochastic = cfg.decoder_stochastic;
    opt.label_modeling = cfg.label_modeling;
    const Eigen::Index n = std::min<Eigen::Index>(256, data.size());
    auto chain = unclamped_chain(as_constants(st.nets.enc), as_constants(st.nets.dec),
                                 cfg.n_steps, n, rng, opt);
    Matrix x_ref(n, data.dim());
    for (Eigen::Index i = 0; i < n; ++i) x_ref.row(i) = data.x.row(rng.index(data.size()));
    rec.metrics["mmd_x"] = mmd_rbf(chain.pair.x.value, x_ref).value;
    if (const auto* meta = std::get_if<MixtureMeta>(&data.meta)) {
      auto cov = mode_coverage(chain.pair.x.value, *meta);
      rec.metrics["coverage_unassigned"] = cov.value;
      rec.metrics["min_mode_fraction"] = cov.details.at("min_mode_fraction");
    }
  }

  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  st.iteration += 1;
  return rec;
}

}  // namespace

TrainRecord train_step(TrainerState& st, const Dataset& data, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  BatchDraw shared = draw_batch(data, cfg, st.iteration, 0);

  double d_loss = 0.0;
  for (int s = 0; s < cfg.loss.disc_steps_per_gen_step; ++s) {
    BatchDraw b = cfg.shared_batches
                      ? shared
                      : draw_batch(data, cfg, st.iteration, 1 + static_cast<std::uint64_t>(s));
    d_loss = disc_update(st, b.x, b.y, cfg, s);
  }
  const double g_loss = gen_update(st, shared.x, shared.y, cfg);
  return finish_record(st, data, cfg, d_loss, g_loss, t0);
}

TrainRecord ali_train_step(TrainerState& st, const Dataset& data, const TrainConfig& cfg) {
  if (cfg.label_modeling)
    throw ConfigError("ali_train_step: label modeling is not part of the baseline trainer");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index dz = cfg.dim_z;
  BatchDraw shared = draw_batch(data, cfg, st.iteration, 0);

  // discriminator phase: generator pair (z0, x ~ p(x|z0)) held constant
  double d_loss = 0.0;
  for (int s = 0; s < cfg.loss.disc_steps_per_gen_step; ++s) {
    BatchDraw b = cfg.shared_batches
                      ? shared
                      : draw_batch(data, cfg, st.iteration, 1 + static_cast<std::uint64_t>(s));
    RandomStream rng = stream_for(cfg, st.iteration, kDiscPhase, static_cast<std::uint64_t>(s));
    Tape tape;
    NetVars disc = register_leaves(tape, st.nets.disc);
    const NetVars enc = as_constants(st.nets.enc);
    const NetVars dec = as_constants(st.nets.dec);

    Matrix z0 = rng.normal_matrix(cfg.batch, dz);
    DecodeResult dr = decode(dec, Tensor(z0), rng, cfg.decoder_stochastic);
    auto clamped = clamped_step(enc, b.x, rng);

    Tensor d_real = discriminate(disc, clamped.x, clamped.z);
    Tensor d_fake = discriminate(disc, dr.x, Tensor(z0));
    Tensor loss = disc_loss(d_real, d_fake);
    require_finite(loss.scalar(), "discriminator", st.iteration);
    tape.backward(loss);
    adam_step(param_refs(st.nets.disc), net_grads(tape, disc), st.opt_disc);
    d_loss = loss.scalar();
  }

  // generator phase: decoder pair live, encoder live on the clamped side
  RandomStream rng = stream_for(cfg, st.iteration, kGenPhase);
  Tape tape;
  NetVars enc = register_leaves(tape, st.nets.enc);
  NetVars dec = register_leaves(tape, st.nets.dec);
  const NetVars disc = as_constants(st.nets.disc);

  Matrix z0 = rng.normal_matrix(cfg.batch, dz);
  DecodeResult dr = decode(dec, Tensor(z0), rng, cfg.decoder_stochastic);
  auto clamped = clamped_step(enc, shared.x, rng);

  Tensor d_fake = discriminate(disc, dr.x, Tensor(z0));
  Tensor d_real = discriminate(disc, clamped.x, clamped.z);
  Tensor loss = add(gen_loss(d_fake, cfg.loss.generator_loss),
                    clamped_fool_loss(d_real, cfg.loss.generator_loss));
  require_finite(loss.scalar(), "generator", st.iteration);
  tape.backward(loss);
  adam_step(param_refs(st.nets.enc), net_grads(tape, enc), st.opt_enc);
  adam_step(param_refs(st.nets.dec), net_grads(tape, dec), st.opt_dec);

  return finish_record(st, data, cfg, d_loss, loss.scalar(), t0);
}

TrainResult train(TrainerState& st, const Dataset& data, const TrainConfig& cfg,
                  const RecordSink& sink) {
  cfg.validate();
  if (data.dim() != cfg.dim_x)
    throw ConfigError("train: dataset dim " + std::to_string(data.dim()) +
                      " != config dim_x " + std::to_string(cfg.dim_x));
  if (cfg.label_modeling && !data.labeled)
    throw ConfigError("train: label_modeling requires a labeled dataset");

  TrainResult result;
  while (st.iteration < cfg.total_iterations) {
    TrainRecord rec = train_step(st, data, cfg);
    if (sink) sink(st, rec);
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::pair<TrainerState, TrainResult> train(const TrainConfig& cfg, const Dataset& data,
                                           const RecordSink& sink) {
  TrainerState st = init_trainer(cfg);
  TrainResult result = train(st, data, cfg, sink);
  return {std::move(st), std::move(result)};
}

}  // namespace gibbsnet
