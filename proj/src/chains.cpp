#include "gibbsnet/chains.hpp"

namespace gibbsnet {
namespace {

void check_dims(const NetVars& enc, const NetVars& dec) {
  const Eigen::Index dx = enc.in_dim(), dz = dec.in_dim();
  if (enc.out_dim() != 2 * dz)
    throw DimensionError("chain: encoder head width " + std::to_string(enc.out_dim()) +
                         " != 2*dim_z = " + std::to_string(2 * dz));
  if (dec.out_dim() != 2 * dx)
    throw DimensionError("chain: decoder head width " + std::to_string(dec.out_dim()) +
                         " != 2*dim_x = " + std::to_string(2 * dx));
}

Matrix draw_eps(RandomStream& rng, Eigen::Index rows, Eigen::Index cols, bool zero_noise) {
  if (zero_noise) return Matrix::Zero(rows, cols);
  return rng.normal_matrix(rows, cols);
}

// One detached (q then p) application on plain values. Consumes rng in the
// same order as the live step so replays line up draw for draw.
std::pair<Matrix, Matrix> value_step(const NetVars& enc_const, const NetVars& dec_const,
                                     const Matrix& x, RandomStream& rng,
                                     const ChainOptions& opt) {
  const Eigen::Index dz = dec_const.in_dim(), dx = enc_const.in_dim();
  Matrix eps_z = draw_eps(rng, x.rows(), dz, opt.zero_noise);
  Matrix z = encode(enc_const, Tensor(x), eps_z).z.value;
  Matrix eps_x;
  if (opt.decoder_stochastic) eps_x = draw_eps(rng, x.rows(), dx, opt.zero_noise);
  Matrix x_next = decode(dec_const, Tensor(z), eps_x, opt.decoder_stochastic).x.value;
  return {std::move(z), std::move(x_next)};
}

}  // namespace

UnclampedChain unclamped_chain(const NetVars& enc, const NetVars& dec, int n_steps,
                               Eigen::Index batch, RandomStream& rng, const ChainOptions& opt) {
  if (n_steps < 1)
    throw ConfigError("unclamped_chain: n_steps must be >= 1, got " + std::to_string(n_steps));
  if (batch < 1) throw ContractError("unclamped_chain: empty batch");
  check_dims(enc, dec);
  const Eigen::Index dz = dec.in_dim(), dx = enc.in_dim();

  const NetVars enc_const = detached_view(enc);
  const NetVars dec_const = detached_view(dec);

  UnclampedChain out;
  auto record = [&](const Matrix& z, const Matrix& x, int step, bool live) {
    if (step == n_steps || opt.record_every <= 1 || step % opt.record_every == 0)
      out.trajectory.push_back(ChainState{x, z, step, live});
  };

  Matrix z0 = draw_eps(rng, batch, dz, opt.zero_noise);  // z ~ N(0, I)
  Matrix x_prev;
  Tensor z_live, x_live;

  for (int step = 1; step <= n_steps; ++step) {
    const bool live = step == n_steps;
    if (!live) {
      // detached prefix: pure value arithmetic, nothing reaches the tape
      if (step == 1) {
        Matrix eps_x;
        if (opt.decoder_stochastic) eps_x = draw_eps(rng, batch, dx, opt.zero_noise);
        x_prev = decode(dec_const, Tensor(z0), eps_x, opt.decoder_stochastic).x.value;
        record(z0, x_prev, step, false);
      } else {
        auto [z_val, x_val] = value_step(enc_const, dec_const, x_prev, rng, opt);
        x_prev = std::move(x_val);
        record(z_val, x_prev, step, false);
      }
      continue;
    }

    // final step: the last q (when present) and the last p stay live
    if (step == 1) {
      z_live = Tensor(z0);
    } else {
      out.final_eps_z = draw_eps(rng, batch, dz, opt.zero_noise);
      z_live = encode(enc, Tensor(x_prev), out.final_eps_z).z;
    }
    if (opt.decoder_stochastic) out.final_eps_x = draw_eps(rng, batch, dx, opt.zero_noise);
    DecodeResult dr = decode(dec, z_live, out.final_eps_x, opt.decoder_stochastic);
    x_live = dr.x;

    if (opt.label_modeling) {
      if (!dr.label_logits)
        throw ContractError("unclamped_chain: label modeling needs a decoder label head");
      out.label_logits = dr.label_logits;
      out.pair.y_features = softmax_rows(*dr.label_logits);
      out.pair.y_hard = sample_labels(dr.label_logits->value, rng);
    }
    record(z_live.value, x_live.value, step, true);
  }

  out.pair.z = z_live;
  out.pair.x = x_live;
  out.pair.source = Source::unclamped;
  return out;
}

JointBatch clamped_step(const NetVars& enc, const Matrix& x_data, RandomStream& rng,
                        bool zero_noise) {
  if (x_data.rows() == 0) throw ContractError("clamped_step: empty batch");
  const Eigen::Index dz = enc.out_dim() / 2;
  Matrix eps = draw_eps(rng, x_data.rows(), dz, zero_noise);
  JointBatch jb;
  jb.x = Tensor(x_data);  // verbatim, never on the tape
  jb.z = encode(enc, jb.x, eps).z;
  jb.source = Source::clamped;
  return jb;
}

std::vector<ChainState> continue_chain(const NetParams& enc, const NetParams& dec,
                                       const Matrix& x_start, int steps, RandomStream& rng,
                                       const ChainOptions& opt) {
  if (steps < 1) throw ConfigError("continue_chain: steps must be >= 1");
  const NetVars enc_const = as_constants(enc);
  const NetVars dec_const = as_constants(dec);
  check_dims(enc_const, dec_const);

  std::vector<ChainState> trajectory;
  Matrix x = x_start;
  for (int step = 1; step <= steps; ++step) {
    auto [z_val, x_val] = value_step(enc_const, dec_const, x, rng, opt);
    x = std::move(x_val);
    if (step == steps || opt.record_every <= 1 || step % opt.record_every == 0)
      trajectory.push_back(ChainState{x, z_val, step, false});
  }
  return trajectory;
}

std::vector<ChainState> inpaint_chain(const NetParams& enc, const NetParams& dec,
                                      const Matrix& x_obs, const std::vector<bool>& mask,
                                      int steps, std::uint64_t seed, bool decoder_stochastic) {
  if (static_cast<Eigen::Index>(mask.size()) != x_obs.cols())
    throw DimensionError("inpaint_chain: mask has " + std::to_string(mask.size()) +
                         " entries for x of width " + std::to_string(x_obs.cols()));
  bool any_observed = false;
  for (bool b : mask) any_observed = any_observed || b;
  if (!any_observed) throw ContractError("inpaint_chain: mask observes no coordinate");
  if (steps < 1) throw ConfigError("inpaint_chain: steps must be >= 1");

  const NetVars enc_const = as_constants(enc);
  const NetVars dec_const = as_constants(dec);
  check_dims(enc_const, dec_const);
  RandomStream rng(mix_seed(seed, 0x1829));
  ChainOptions opt;
  opt.decoder_stochastic = decoder_stochastic;

  std::vector<ChainState> trajectory;
  trajectory.reserve(static_cast<std::size_t>(steps));
  Matrix x = x_obs;
  for (int step = 1; step <= steps; ++step) {
    auto [z_val, x_val] = value_step(enc_const, dec_const, x, rng, opt);
    x = std::move(x_val);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (mask[static_cast<std::size_t>(j)]) x.col(j) = x_obs.col(j);
    trajectory.push_back(ChainState{x, z_val, step, false});
  }
  return trajectory;
}

}  // namespace gibbsnet
