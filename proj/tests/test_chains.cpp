#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gibbsnet/chains.hpp"
#include "gibbsnet/losses.hpp"
#include "testutil.hpp"

using namespace gibbsnet;
using testutil::grad_close;
using testutil::numeric_grad;
using testutil::random_matrix;

namespace {

struct TestNets {
  NetParams enc, dec, disc;
};

TestNets small_nets(std::uint64_t seed, Eigen::Index dx = 2, Eigen::Index dz = 2) {
  TestNets n;
  n.enc = init_params({dx, 6, 2 * dz}, mix_seed(seed, 1), Role::encoder);
  n.dec = init_params({dz, 6, 2 * dx}, mix_seed(seed, 2), Role::decoder);
  n.disc = init_params({dx + dz, 6, 1}, mix_seed(seed, 3), Role::discriminator);
  return n;
}

std::vector<Matrix> param_values(const NetParams& p) {
  std::vector<Matrix> vals;
  for (const Matrix* m : param_refs(p)) vals.push_back(*m);
  return vals;
}

void set_param_values(NetParams& p, const std::vector<Matrix>& vals) {
  auto refs = param_refs(p);
  for (std::size_t i = 0; i < refs.size(); ++i) *refs[i] = vals[i];
}

}  // namespace

TEST_CASE("n_steps = 1 reproduces the prior-and-decoder generator bit-exactly") {
  TestNets nets = small_nets(100);
  const Eigen::Index batch = 8;

  RandomStream chain_rng(1234);
  auto chain = unclamped_chain(as_constants(nets.enc), as_constants(nets.dec), 1, batch,
                               chain_rng);

  // the same graph written out by hand, sharing the seed
  RandomStream ali_rng(1234);
  Matrix z0 = ali_rng.normal_matrix(batch, 2);
  auto dr = decode(as_constants(nets.dec), Tensor(z0), ali_rng);

  CHECK(chain.pair.z.value == z0);
  CHECK(chain.pair.x.value == dr.x.value);
  CHECK(chain.trajectory.size() == 1);
}

TEST_CASE("at n_steps = 1 the encoder receives no gradient at all") {
  TestNets nets = small_nets(101);
  RandomStream rng(5);
  Tape tape;
  NetVars enc = register_leaves(tape, nets.enc);
  NetVars dec = register_leaves(tape, nets.dec);
  auto chain = unclamped_chain(enc, dec, 1, 4, rng);
  tape.backward(add(sum(chain.pair.x), sum(chain.pair.z)));
  for (const Matrix& g : net_grads(tape, enc)) CHECK((g.array() == 0.0).all());
  bool dec_touched = false;
  for (const Matrix& g : net_grads(tape, dec)) dec_touched = dec_touched || g.cwiseAbs().sum() > 0;
  CHECK(dec_touched);
}

TEST_CASE("zero-weight decoder with zero noise emits zero for any chain length") {
  for (int n : {1, 3}) {
    TestNets nets = small_nets(102);
    for (Matrix* m : param_refs(nets.dec)) m->setZero();
    RandomStream rng(9);
    ChainOptions opt;
    opt.zero_noise = true;
    auto chain = unclamped_chain(as_constants(nets.enc), as_constants(nets.dec), n, 5, rng, opt);
    CHECK((chain.pair.x.value.array() == 0.0).all());
  }
}

TEST_CASE("chain gradient equals the last step replayed with a frozen prefix") {
  for (int n : {2, 3, 5}) {
    CAPTURE(n);
    TestNets nets = small_nets(200 + static_cast<std::uint64_t>(n));
    const Eigen::Index batch = 4;

    Tape tape;
    NetVars enc = register_leaves(tape, nets.enc);
    NetVars dec = register_leaves(tape, nets.dec);
    RandomStream rng(777);
    auto chain = unclamped_chain(enc, dec, n, batch, rng);
    tape.backward(add(sum(chain.pair.x), sum(chain.pair.z)));
    auto analytic_enc = net_grads(tape, enc);
    auto analytic_dec = net_grads(tape, dec);

    // frozen prefix: x_{N-1} and the live-step noises from the recorded run
    const Matrix x_prev = chain.trajectory[static_cast<std::size_t>(n) - 2].x;
    const Matrix eps_z = chain.final_eps_z, eps_x = chain.final_eps_x;

    auto replay = [&](const NetParams& e, const NetParams& d) {
      Tensor z = encode(as_constants(e), Tensor(x_prev), eps_z).z;
      Tensor x = decode(as_constants(d), z, eps_x).x;
      return add(sum(x), sum(z)).scalar();
    };

    auto fe = [&](const std::vector<Matrix>& vals) {
      NetParams e = nets.enc;
      set_param_values(e, vals);
      return replay(e, nets.dec);
    };
    auto fd = [&](const std::vector<Matrix>& vals) {
      NetParams d = nets.dec;
      set_param_values(d, vals);
      return replay(nets.enc, d);
    };
    CHECK(grad_close(analytic_enc, numeric_grad(fe, param_values(nets.enc))));
    CHECK(grad_close(analytic_dec, numeric_grad(fd, param_values(nets.dec))));

    // and the same single-step graph built directly gives bit-identical grads
    Tape tape2;
    NetVars enc2 = register_leaves(tape2, nets.enc);
    NetVars dec2 = register_leaves(tape2, nets.dec);
    Tensor z2 = encode(enc2, Tensor(x_prev), eps_z).z;
    Tensor x2 = decode(dec2, z2, eps_x).x;
    tape2.backward(add(sum(x2), sum(z2)));
    auto direct_enc = net_grads(tape2, enc2);
    auto direct_dec = net_grads(tape2, dec2);
    for (std::size_t i = 0; i < analytic_enc.size(); ++i)
      CHECK(analytic_enc[i] == direct_enc[i]);
    for (std::size_t i = 0; i < analytic_dec.size(); ++i)
      CHECK(analytic_dec[i] == direct_dec[i]);
  }
}

TEST_CASE("discriminator loss on detached pairs sends nothing to encoder or decoder") {
  TestNets nets = small_nets(104);
  RandomStream rng(31);
  Tape tape;
  NetVars enc = register_leaves(tape, nets.enc);
  NetVars dec = register_leaves(tape, nets.dec);
  NetVars disc = register_leaves(tape, nets.disc);

  auto chain = unclamped_chain(enc, dec, 3, 6, rng);
  Matrix x_data = random_matrix(6, 2, rng);
  auto clamped = clamped_step(enc, x_data, rng);

  Tensor d_real = discriminate(disc, clamped.x, detach(clamped.z));
  Tensor d_fake = discriminate(disc, detach(chain.pair.x), detach(chain.pair.z));
  tape.backward(disc_loss(d_real, d_fake));

  for (const Matrix& g : net_grads(tape, enc)) CHECK((g.array() == 0.0).all());
  for (const Matrix& g : net_grads(tape, dec)) CHECK((g.array() == 0.0).all());
  bool disc_touched = false;
  for (const Matrix& g : net_grads(tape, disc))
    disc_touched = disc_touched || g.cwiseAbs().sum() > 0;
  CHECK(disc_touched);
}

TEST_CASE("clamped step keeps x verbatim and draws fresh z per seed") {
  TestNets nets = small_nets(105);
  RandomStream rng(3);
  Matrix x_data = random_matrix(7, 2, rng);

  RandomStream r1(11), r2(12);
  auto a = clamped_step(as_constants(nets.enc), x_data, r1);
  auto b = clamped_step(as_constants(nets.enc), x_data, r2);
  CHECK(a.x.value == x_data);
  CHECK(b.x.value == x_data);
  CHECK(a.z.value != b.z.value);
  CHECK(a.source == Source::clamped);

  for (Matrix* m : param_refs(nets.enc)) m->setZero();
  RandomStream r3(13);
  auto c = clamped_step(as_constants(nets.enc), x_data, r3, /*zero_noise=*/true);
  CHECK((c.z.value.array() == 0.0).all());

  CHECK_THROWS_AS(clamped_step(as_constants(nets.enc), Matrix(0, 2), r3), ContractError);
}

TEST_CASE("transitions are Markov: replay from a saved state matches the continuation") {
  TestNets nets = small_nets(106);
  const int total = 6, cut = 3;
  const Eigen::Index batch = 5, dz = 2, dx = 2;

  RandomStream full_rng(2718);
  auto full = unclamped_chain(as_constants(nets.enc), as_constants(nets.dec), total, batch,
                              full_rng);

  // burn the draws the first `cut` steps consumed, then continue from the cut
  RandomStream replay_rng(2718);
  replay_rng.normal_matrix(batch, dz);  // prior
  replay_rng.normal_matrix(batch, dx);  // decoder noise, step 1
  for (int s = 2; s <= cut; ++s) {
    replay_rng.normal_matrix(batch, dz);
    replay_rng.normal_matrix(batch, dx);
  }
  auto cont = continue_chain(nets.enc, nets.dec,
                             full.trajectory[static_cast<std::size_t>(cut) - 1].x, total - cut,
                             replay_rng);
  for (int s = 0; s < total - cut; ++s) {
    CHECK(cont[static_cast<std::size_t>(s)].x ==
          full.trajectory[static_cast<std::size_t>(cut + s)].x);
    CHECK(cont[static_cast<std::size_t>(s)].z ==
          full.trajectory[static_cast<std::size_t>(cut + s)].z);
  }
}

TEST_CASE("trajectory bookkeeping: steps increment by one, only the last is live") {
  TestNets nets = small_nets(107);
  RandomStream rng(4);
  auto chain = unclamped_chain(as_constants(nets.enc), as_constants(nets.dec), 5, 3, rng);
  REQUIRE(chain.trajectory.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(chain.trajectory[static_cast<std::size_t>(i)].step == i + 1);
    CHECK(chain.trajectory[static_cast<std::size_t>(i)].live_gradient == (i == 4));
  }
  CHECK_THROWS_AS(
      unclamped_chain(as_constants(nets.enc), as_constants(nets.dec), 0, 3, rng), ConfigError);
}

TEST_CASE("inpainting clamps observed coordinates bit-exactly at every step") {
  TestNets nets = small_nets(108, 4, 2);
  RandomStream rng(6);
  Matrix x_obs = random_matrix(3, 4, rng);

  auto traj = inpaint_chain(nets.enc, nets.dec, x_obs, {true, false, true, false}, 12, 99);
  CHECK(traj.size() == 12);
  for (const auto& state : traj) {
    CHECK(state.x.col(0) == x_obs.col(0));
    CHECK(state.x.col(2) == x_obs.col(2));
  }

  auto all_obs = inpaint_chain(nets.enc, nets.dec, x_obs, {true, true, true, true}, 4, 99);
  for (const auto& state : all_obs) CHECK(state.x == x_obs);

  CHECK_THROWS_AS(inpaint_chain(nets.enc, nets.dec, x_obs, {true, false}, 3, 1), DimensionError);
  CHECK_THROWS_AS(
      inpaint_chain(nets.enc, nets.dec, x_obs, {false, false, false, false}, 3, 1),
      ContractError);
}

TEST_CASE("label modeling emits live softmax features plus hard samples") {
  NetParams enc = init_params({2, 6, 4}, 1, Role::encoder);
  NetParams dec = init_params({2, 6, 4}, 2, Role::decoder, 3);
  Tape tape;
  NetVars encv = register_leaves(tape, enc);
  NetVars decv = register_leaves(tape, dec);
  RandomStream rng(8);
  ChainOptions opt;
  opt.label_modeling = true;
  auto chain = unclamped_chain(encv, decv, 2, 10, rng, opt);
  REQUIRE(chain.pair.y_features.has_value());
  CHECK(chain.pair.y_features->cols() == 3);
  CHECK(chain.pair.y_features->connected());
  CHECK(chain.pair.y_hard.size() == 10);
  for (int y : chain.pair.y_hard) CHECK((y >= 0 && y < 3));
  // rows of the softmax features sum to one
  CHECK((chain.pair.y_features->value.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
}
