#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mptp/inverse.hpp"
#include "mptp/pinn.hpp"

using namespace mptp;

namespace {

double mixed_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// z(t) = sinh(t)/sinh(1) solves z'' = z on [0, 1]: the minimizer for the
// linear-decay drift f = -x under the small-noise action with z(0)=0, z(1)=1.
ObservationSet sinh_observations(int N) {
  ObservationSet obs;
  obs.dim = 1;
  obs.times.resize(N);
  obs.states.resize(N);
  for (int i = 0; i < N; ++i) {
    obs.times[i] = static_cast<double>(i) / (N - 1);
    obs.states[i] = std::sinh(obs.times[i]) / std::sinh(1.0);
  }
  return obs;
}

ObservationSet line_observations(double x0, double xT, double T, int N) {
  return observe_path(PathSample::straight_line({x0}, {xT}, T, 201), N);
}

template <class Loss>
void check_grad_matches_fd(const Loss& loss, const MlpParams& net,
                           const std::vector<double>& aux) {
  const auto an = loss_grad(loss, net, aux);
  const auto fd = numeric_loss_grad(loss, net, aux);
  REQUIRE(an.grad_params.size() == fd.grad_params.size());
  REQUIRE(an.grad_aux.size() == fd.grad_aux.size());
  double worst = 0.0;
  for (size_t i = 0; i < an.grad_params.size(); ++i)
    worst = std::max(worst, mixed_err(an.grad_params[i], fd.grad_params[i]));
  for (size_t i = 0; i < an.grad_aux.size(); ++i)
    worst = std::max(worst, mixed_err(an.grad_aux[i], fd.grad_aux[i]));
  CHECK(worst <= 1e-5);
}

MlpParams perturbed_net(const std::vector<int>& dims, uint64_t seed) {
  auto p = mlp_init(dims, seed);
  std::mt19937_64 rng(seed ^ 0x51ull);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (auto& v : p.data) v += u(rng);
  return p;
}

}  // namespace

TEST_CASE("observation validation and sampling") {
  auto obs = line_observations(-1.0, 1.0, 2.0, 21);
  obs.validate();
  CHECK(obs.n_obs() == 21);
  CHECK(obs.times.front() == 0.0);
  CHECK(obs.times.back() == 2.0);
  CHECK(obs.uniform_step() == doctest::Approx(0.1).epsilon(1e-12));
  for (int i = 0; i < 21; ++i)
    CHECK(std::abs(obs.states[i] - (-1.0 + 0.1 * i)) <= 1e-12);

  auto bad = obs;
  bad.times[5] = bad.times[4];
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = obs;
  bad.states.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = obs;
  bad.eta = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = obs;
  bad.anchor_x = {0.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // value missing
  bad = obs;
  bad.times[5] += 0.03;
  bad.validate();  // still increasing ...
  CHECK_THROWS_AS(bad.uniform_step(), std::invalid_argument);  // ... but not uniform

  CHECK_THROWS_AS(observe_path(PathSample::straight_line({0.0}, {1.0}, 1.0, 9), 1),
                  std::invalid_argument);
}

TEST_CASE("finite-difference residual on closed forms") {
  // Straight line under zero drift: the residual is pure roundoff.
  auto line = line_observations(-1.0, 1.0, 2.0, 21);
  ElResidualSpec zero_spec(DriftModel::zero(1), NoiseSpec::fw());
  auto res = fd_el_residual(line, zero_spec);
  REQUIRE(res.size() == 19);
  for (double r : res) CHECK(std::abs(r) <= 1e-11);

  // sinh path under f = -x: sinh(t+tau) + sinh(t-tau) = 2 cosh(tau) sinh(t)
  // makes the discrete residual exactly z_i (2(cosh tau - 1)/tau^2 - 1).
  for (int N : {21, 41}) {
    auto obs = sinh_observations(N);
    ElResidualSpec spec(DriftModel::linear_decay(1.0), NoiseSpec::fw());
    auto r = fd_el_residual(obs, spec);
    const double tau = 1.0 / (N - 1);
    const double factor = 2.0 * (std::cosh(tau) - 1.0) / (tau * tau) - 1.0;
    for (int i = 0; i < N - 2; ++i)
      CHECK(std::abs(r[i] - obs.states[i + 1] * factor) <= 1e-11);
  }

  // Refinement: doubling the grid quarters the truncation error.
  const double m21 = std::abs(fd_el_residual(sinh_observations(21),
                                             ElResidualSpec(DriftModel::linear_decay(1.0),
                                                            NoiseSpec::fw()))
                                  .back());
  const double m41 = std::abs(fd_el_residual(sinh_observations(41),
                                             ElResidualSpec(DriftModel::linear_decay(1.0),
                                                            NoiseSpec::fw()))
                                  .back());
  CHECK(m21 / m41 == doctest::Approx(4.0).epsilon(0.05));

  auto bad = line;
  bad.times[5] += 0.03;
  CHECK_THROWS_AS(fd_el_residual(bad, zero_spec), std::invalid_argument);
  CHECK_THROWS_AS(fd_el_residual(line, ElResidualSpec(DriftModel::zero(2), NoiseSpec::fw())),
                  std::invalid_argument);
}

TEST_CASE("fd residual loss and its beta gradient") {
  auto obs = sinh_observations(21);
  const auto family = DriftModel::double_well(0.9, -1.1);
  const auto noise = NoiseSpec::fw();

  // Value agrees with the mean square of the residual vector.
  std::vector<double> g;
  const double loss = fd_residual_loss(obs, family, noise, &g);
  auto res = fd_el_residual(obs, ElResidualSpec(family, noise));
  double ms = 0.0;
  for (double r : res) ms += r * r / res.size();
  CHECK(mixed_err(loss, ms) <= 1e-14);

  // Analytic beta gradient vs central differences.
  REQUIRE(g.size() == 2);
  auto beta = family.beta;
  for (int p = 0; p < 2; ++p) {
    const double h = 1e-6 * std::max(1.0, std::abs(beta[p]));
    auto bp = beta, bm = beta;
    bp[p] += h;
    bm[p] -= h;
    const double fp = fd_residual_loss(obs, family.with_beta(bp), noise, nullptr);
    const double fm = fd_residual_loss(obs, family.with_beta(bm), noise, nullptr);
    CHECK(mixed_err(g[p], (fp - fm) / (2.0 * h)) <= 1e-6);
  }

  // Same check for the four-parameter planar family on off-axis data.
  ObservationSet obs2;
  obs2.dim = 2;
  for (int i = 0; i < 15; ++i) {
    const double t = i / 14.0;
    obs2.times.push_back(t);
    obs2.states.push_back(-1.0 + t);
    obs2.states.push_back(-1.0 + 0.8 * t + 0.2 * t * t);
  }
  const auto ms_family = DriftModel::maier_stein(1.0, -1.0, -1.0, -1.0);
  std::vector<double> g2;
  fd_residual_loss(obs2, ms_family, noise, &g2);
  auto beta2 = ms_family.beta;
  for (int p = 0; p < 4; ++p) {
    const double h = 1e-6;
    auto bp = beta2, bm = beta2;
    bp[p] += h;
    bm[p] -= h;
    const double fp = fd_residual_loss(obs2, ms_family.with_beta(bp), noise, nullptr);
    const double fm = fd_residual_loss(obs2, ms_family.with_beta(bm), noise, nullptr);
    CHECK(mixed_err(g2[p], (fp - fm) / (2.0 * h)) <= 1e-6);
  }
}

TEST_CASE("on-axis planar data carries no information about the transverse parameters") {
  // Data confined to y = 0: the loss gradient w.r.t. the two parameters that
  // only act off-axis vanishes identically, not just approximately.
  ObservationSet obs;
  obs.dim = 2;
  for (int i = 0; i < 21; ++i) {
    const double t = i / 20.0;
    obs.times.push_back(t);
    obs.states.push_back(std::tanh(3.0 * (t - 0.5)));
    obs.states.push_back(0.0);
  }
  std::vector<double> g;
  fd_residual_loss(obs, DriftModel::maier_stein(1.0, -1.0, -1.0, -1.0), NoiseSpec::fw(), &g);
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 0.0);
  CHECK(std::abs(g[0]) > 1e-6);  // the on-axis parameters are identified
  CHECK(std::abs(g[1]) > 1e-6);
}

TEST_CASE("parametric inverse loss gradient matches finite differences") {
  auto obs1 = line_observations(-1.0, 1.0, 2.0, 9);
  auto pts1 = sample_residual_points(7, 2.0, 3);
  ParamInverseLoss dw(DriftModel::double_well(0.8, -1.2), NoiseSpec::fw(), obs1, 1.7, pts1);
  check_grad_matches_fd(dw, perturbed_net({1, 6, 5, 1}, 2), {0.8, -1.2});

  ParamInverseLoss om(DriftModel::linear_decay(0.6), NoiseSpec::om({0.4}), obs1, 0.9, pts1);
  check_grad_matches_fd(om, perturbed_net({1, 5, 6, 1}, 5), {0.6});

  ObservationSet obs2;
  obs2.dim = 2;
  for (int i = 0; i < 9; ++i) {
    const double t = i / 4.0;
    obs2.times.push_back(t);
    obs2.states.push_back(-1.0 + t / 2.0);
    obs2.states.push_back(-0.3 + 0.1 * t);
  }
  auto pts2 = sample_residual_points(6, 2.0, 8);
  ParamInverseLoss ms(DriftModel::maier_stein(0.9, -1.1, -0.8, -1.2), NoiseSpec::fw(), obs2, 1.0,
                      pts2);
  check_grad_matches_fd(ms, perturbed_net({1, 6, 5, 2}, 7), {0.9, -1.1, -0.8, -1.2});

  // Construction rejects broken inputs.
  CHECK_THROWS_AS(ParamInverseLoss(DriftModel::zero(1), NoiseSpec::fw(), obs1, 1.0, pts1),
                  std::invalid_argument);
  CHECK_THROWS_AS(ParamInverseLoss(DriftModel::double_well(1.0, -1.0), NoiseSpec::fw(), obs1, 0.0,
                                   pts1),
                  std::invalid_argument);
  CHECK_THROWS_AS(ParamInverseLoss(DriftModel::double_well(1.0, -1.0), NoiseSpec::fw(), obs1, 1.0,
                                   std::vector<double>{2.5}),
                  std::invalid_argument);
}

TEST_CASE("nonparametric loss gradient matches finite differences") {
  auto obs = sinh_observations(9);
  obs.anchor_x = {0.2, 0.9};
  obs.anchor_f = {-0.2, -0.9};

  NonParamLoss fw(obs, NoiseSpec::fw(), 3.7, 0.05);
  check_grad_matches_fd(fw, perturbed_net({1, 6, 5, 1}, 11), {});

  NonParamLoss om(obs, NoiseSpec::om({0.4}), 3.7, 0.05);
  check_grad_matches_fd(om, perturbed_net({1, 5, 6, 1}, 12), {});

  ObservationSet planar;
  planar.dim = 2;
  planar.times = {0.0, 0.5, 1.0};
  planar.states = {0.0, 0.0, 0.5, 0.1, 1.0, 0.0};
  CHECK_THROWS_AS(NonParamLoss(planar, NoiseSpec::fw(), 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("zero iterations leave the initial state untouched") {
  auto obs = sinh_observations(21);
  ParamInverseConfig cfg;
  cfg.beta0 = {0.5};
  cfg.iterations = 0;
  cfg.seed = 9;
  auto r = train_parametric(DriftModel::linear_decay(0.5), NoiseSpec::fw(), obs, cfg);
  CHECK(r.beta == std::vector<double>{0.5});
  CHECK(r.net.data == mlp_init({1, 20, 20, 20, 20, 1}, 9).data);
  CHECK(r.history.empty());
  CHECK_FALSE(r.diverged);

  NonParamConfig ncfg;
  ncfg.iterations = 0;
  ncfg.seed = 4;
  auto nr = train_nonparametric(obs, NoiseSpec::fw(), ncfg);
  CHECK(nr.net.data == mlp_init(ncfg.layer_dims, 4).data);
  CHECK(nr.history.empty());
}

TEST_CASE("single linear-decay rate recovered from the closed-form path") {
  auto obs = sinh_observations(21);
  ParamInverseConfig cfg;
  cfg.beta0 = {0.5};
  cfg.m = 301;
  cfg.iterations = 40000;
  cfg.lr = 1e-3;
  cfg.seed = 1;
  cfg.hidden = {20, 20};
  auto r = train_parametric(DriftModel::linear_decay(0.5), NoiseSpec::fw(), obs, cfg);
  REQUIRE_FALSE(r.diverged);
  CHECK(std::abs(r.beta[0] - 1.0) <= 0.05);
  // The history tracks the parameter drift from 0.5 toward 1.
  CHECK(r.history.front().beta[0] == 0.5);
  CHECK(r.history.back().total < r.history.front().total);
}

TEST_CASE("drift network recovers the zero drift from a straight line") {
  auto obs = line_observations(-1.0, 1.0, 2.0, 201);
  obs.anchor_x = {0.0};
  obs.anchor_f = {0.0};
  NonParamConfig cfg;
  cfg.layer_dims = {1, 20, 20, 1};
  cfg.gamma1 = 1e4;
  cfg.gamma2 = 0.0;
  cfg.iterations = 10000;
  cfg.lr = 1e-3;
  cfg.seed = 2;
  auto r = train_nonparametric(obs, NoiseSpec::fw(), cfg);
  REQUIRE_FALSE(r.diverged);
  double rmse = 0.0;
  const int n_eval = 101;
  for (int i = 0; i < n_eval; ++i) {
    const double x = -1.0 + 2.0 * i / (n_eval - 1);
    const double v = mlp_eval(r.net, x)[0];
    rmse += v * v / n_eval;
  }
  CHECK(std::sqrt(rmse) <= 1e-2);
}

TEST_CASE("weight decay alone shrinks the weights monotonically") {
  // All-zero data with zero biases keeps every data term and its gradient at
  // exactly zero, so training reduces to decay of the weights.
  ObservationSet obs;
  obs.dim = 1;
  for (int i = 0; i < 11; ++i) {
    obs.times.push_back(i / 10.0);
    obs.states.push_back(0.0);
  }
  obs.anchor_x = {0.0};
  obs.anchor_f = {0.0};
  NonParamConfig cfg;
  cfg.layer_dims = {1, 10, 10, 1};
  cfg.gamma1 = 1.0;
  cfg.gamma2 = 0.1;
  cfg.iterations = 200;
  cfg.lr = 1e-3;
  cfg.history_stride = 20;
  auto r = train_nonparametric(obs, NoiseSpec::fw(), cfg);
  REQUIRE_FALSE(r.diverged);
  REQUIRE(r.history.size() >= 5);
  for (const auto& rec : r.history) {
    CHECK(rec.ode == 0.0);
    CHECK(rec.drift == 0.0);
    CHECK(rec.total == rec.reg);
  }
  for (size_t i = 1; i < r.history.size(); ++i)
    CHECK(r.history[i].reg < r.history[i - 1].reg);
}

TEST_CASE("runaway learning rate is reported as divergence") {
  auto obs = sinh_observations(11);
  ParamInverseConfig cfg;
  cfg.beta0 = {0.5};
  cfg.m = 5;
  cfg.iterations = 50;
  cfg.lr = 1e200;
  cfg.hidden = {6};
  auto r = train_parametric(DriftModel::linear_decay(0.5), NoiseSpec::fw(), obs, cfg);
  CHECK(r.diverged);
  CHECK(r.diverged_at >= 1);
  CHECK(r.diverged_at < 50);
}

TEST_CASE("inverse configuration validation") {
  const auto family = DriftModel::double_well(1.0, -1.0);
  ParamInverseConfig cfg;
  cfg.beta0 = {1.0, -1.0};
  cfg.validate(family);
  auto bad = cfg;
  bad.beta0 = {1.0};
  CHECK_THROWS_AS(bad.validate(family), std::invalid_argument);
  bad = cfg;
  bad.lambda_d = 0.0;
  CHECK_THROWS_AS(bad.validate(family), std::invalid_argument);
  bad = cfg;
  bad.hidden = {};
  CHECK_THROWS_AS(bad.validate(family), std::invalid_argument);
  CHECK_THROWS_AS(cfg.validate(DriftModel::zero(1)), std::invalid_argument);

  NonParamConfig ncfg;
  ncfg.validate();
  auto nbad = ncfg;
  nbad.layer_dims = {1, 1};
  CHECK_THROWS_AS(nbad.validate(), std::invalid_argument);
  nbad = ncfg;
  nbad.layer_dims = {2, 10, 1};
  CHECK_THROWS_AS(nbad.validate(), std::invalid_argument);
  nbad = ncfg;
  nbad.gamma2 = -1.0;
  CHECK_THROWS_AS(nbad.validate(), std::invalid_argument);
}
