#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mptp/drift.hpp"

using namespace mptp;

namespace {

double mixed_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

std::vector<DriftModel> all_models() {
  return {DriftModel::zero(1),
          DriftModel::zero(2),
          DriftModel::linear_decay(1.3),
          DriftModel::double_well(1.0, -1.0),
          DriftModel::gene_regulation(6.0, 10.0, 1.0, 0.4),
          DriftModel::maier_stein(1.0, -1.0, -1.0, -1.0),
          DriftModel::maier_stein(0.7, -1.2, -0.4, -0.9)};
}

std::vector<double> random_point(const DriftModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> ug(0.05, 6.0);
  std::vector<double> x(m.dim);
  for (auto& v : x) v = (m.kind == DriftKind::gene_regulation) ? ug(rng) : u(rng);
  return x;
}

}  // namespace

TEST_CASE("double well hand values") {
  auto m = DriftModel::double_well(1.0, -1.0);
  CHECK(m.f({1.0})[0] == 0.0);
  CHECK(m.f({0.5})[0] == doctest::Approx(0.375));
  CHECK(m.jac({0.5})[0] == doctest::Approx(0.25));
  CHECK(m.grad_div({0.5})[0] == doctest::Approx(-3.0));
}

TEST_CASE("maier stein stable node") {
  auto m = DriftModel::maier_stein(1.0, -1.0, -1.0, -1.0);
  auto f = m.f({-1.0, 0.0});
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
}

TEST_CASE("maier stein matches the cubic form at gamma one") {
  auto m = DriftModel::maier_stein(1.0, -1.0, -1.0, -1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng), y = u(rng);
    auto f = m.f({x, y});
    CHECK(f[0] == doctest::Approx(x - x * x * x - x * y * y).epsilon(1e-14));
    CHECK(f[1] == doctest::Approx(-(1.0 + x * x) * y).epsilon(1e-14));
  }
}

TEST_CASE("jacobian and grad-div match finite differences") {
  std::mt19937_64 rng(12345);
  for (const auto& m : all_models()) {
    const int d = m.dim;
    std::vector<double> f0(d), f1(d), J(d * d), gd(d);
    for (int rep = 0; rep < 100; ++rep) {
      auto x = random_point(m, rng);
      m.jac(x.data(), J.data());
      m.grad_div(x.data(), gd.data());
      const double h = 1e-5;
      for (int j = 0; j < d; ++j) {
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        m.f(xp.data(), f1.data());
        m.f(xm.data(), f0.data());
        for (int k = 0; k < d; ++k)
          CHECK(mixed_err(J[k * d + j], (f1[k] - f0[k]) / (2 * h)) <= 1e-6);
        CHECK(mixed_err(gd[j], (m.div(xp.data()) - m.div(xm.data())) / (2 * h)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("drift hessian matches finite differences of the jacobian") {
  std::mt19937_64 rng(99);
  for (const auto& m : all_models()) {
    const int d = m.dim;
    std::vector<double> H(d * d * d), Jp(d * d), Jm(d * d), HD(d * d), gp(d), gm(d);
    for (int rep = 0; rep < 50; ++rep) {
      auto x = random_point(m, rng);
      m.hess(x.data(), H.data());
      m.hess_div(x.data(), HD.data());
      const double h = 1e-5;
      for (int l = 0; l < d; ++l) {
        auto xp = x, xm = x;
        xp[l] += h;
        xm[l] -= h;
        m.jac(xp.data(), Jp.data());
        m.jac(xm.data(), Jm.data());
        m.grad_div(xp.data(), gp.data());
        m.grad_div(xm.data(), gm.data());
        for (int k = 0; k < d; ++k) {
          for (int j = 0; j < d; ++j)
            CHECK(mixed_err(H[(k * d + j) * d + l], (Jp[k * d + j] - Jm[k * d + j]) / (2 * h)) <= 1e-5);
          CHECK(mixed_err(HD[k * d + l], (gp[k] - gm[k]) / (2 * h)) <= 1e-5);
        }
      }
    }
  }
}

TEST_CASE("parameter derivatives match finite differences") {
  std::mt19937_64 rng(4242);
  for (const auto& m : all_models()) {
    const int d = m.dim;
    const int P = m.n_params();
    if (P == 0) continue;
    std::vector<double> dfdb(P * d), djdb(P * d * d), dgdb(P * d);
    std::vector<double> fp(d), fm(d), Jp(d * d), Jm(d * d), gp(d), gm(d);
    for (int rep = 0; rep < 30; ++rep) {
      auto x = random_point(m, rng);
      m.df_dbeta(x.data(), dfdb.data());
      m.djac_dbeta(x.data(), djdb.data());
      m.dgrad_div_dbeta(x.data(), dgdb.data());
      for (int p = 0; p < P; ++p) {
        const double h = 1e-6 * std::max(1.0, std::abs(m.beta[p]));
        auto bp = m.beta, bm = m.beta;
        bp[p] += h;
        bm[p] -= h;
        auto mp = m.with_beta(bp);
        auto mm = m.with_beta(bm);
        mp.f(x.data(), fp.data());
        mm.f(x.data(), fm.data());
        mp.jac(x.data(), Jp.data());
        mm.jac(x.data(), Jm.data());
        mp.grad_div(x.data(), gp.data());
        mm.grad_div(x.data(), gm.data());
        for (int k = 0; k < d; ++k) {
          CHECK(mixed_err(dfdb[p * d + k], (fp[k] - fm[k]) / (2 * h)) <= 1e-6);
          CHECK(mixed_err(dgdb[p * d + k], (gp[k] - gm[k]) / (2 * h)) <= 1e-5);
          for (int j = 0; j < d; ++j)
            CHECK(mixed_err(djdb[p * d * d + k * d + j], (Jp[k * d + j] - Jm[k * d + j]) / (2 * h)) <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("gradient-field models have symmetric jacobians") {
  std::mt19937_64 rng(31);
  for (const auto& m : {DriftModel::double_well(0.8, -1.1),
                        DriftModel::gene_regulation(6.0, 10.0, 1.0, 0.4),
                        DriftModel::maier_stein(1.0, -1.0, -1.0, -1.0),
                        DriftModel::maier_stein(0.5, -2.0, 0.3, -0.7)}) {
    const int d = m.dim;
    std::vector<double> J(d * d);
    for (int rep = 0; rep < 100; ++rep) {
      auto x = random_point(m, rng);
      m.jac(x.data(), J.data());
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < k; ++j) CHECK(J[k * d + j] == doctest::Approx(J[j * d + k]).epsilon(1e-14));
    }
  }
}

TEST_CASE("equilibria of the bistable gene model") {
  // R_bas = 0.4 is the parameter set consistent with these three roots; see
  // the project notes on the 0.6 variant, which is monostable.
  auto m = DriftModel::gene_regulation(6.0, 10.0, 1.0, 0.4);
  auto eq = find_equilibria(m, 0.0, 6.0);
  REQUIRE(eq.size() == 3);
  CHECK(std::abs(eq[0].x - 0.62685) <= 1e-4);
  CHECK(std::abs(eq[1].x - 1.48971) <= 1e-4);
  CHECK(std::abs(eq[2].x - 4.28343) <= 1e-4);
  CHECK(eq[0].stable);
  CHECK(!eq[1].stable);
  CHECK(eq[2].stable);
}

TEST_CASE("equilibria of the double well and linear decay") {
  auto dw = find_equilibria(DriftModel::double_well(1.0, -1.0), -2.0, 2.0);
  REQUIRE(dw.size() == 3);
  CHECK(std::abs(dw[0].x + 1.0) <= 1e-9);
  CHECK(std::abs(dw[1].x) <= 1e-9);
  CHECK(std::abs(dw[2].x - 1.0) <= 1e-9);
  CHECK(dw[0].stable);
  CHECK(!dw[1].stable);
  CHECK(dw[2].stable);

  auto ld = find_equilibria(DriftModel::linear_decay(1.0), -1.0, 1.0);
  REQUIRE(ld.size() == 1);
  CHECK(std::abs(ld[0].x) <= 1e-9);
  CHECK(ld[0].stable);

  CHECK(find_equilibria(DriftModel::gene_regulation(6, 10, 1, 0.4), 5.0, 6.0).empty());
  CHECK_THROWS_AS(find_equilibria(DriftModel::maier_stein(1, -1, -1, -1), -1, 1), std::invalid_argument);
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(DriftModel::gene_regulation(6.0, 0.0, 1.0, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(DriftModel::gene_regulation(6.0, -1.0, 1.0, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(DriftModel::zero(0), std::invalid_argument);
  CHECK_THROWS_AS(DriftModel::double_well(1, -1).f({0.1, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::om({1.0, -1.0}).validate(2), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec::om({1.0}).validate(2), std::invalid_argument);
  CHECK_NOTHROW(NoiseSpec::om_uniform(0.1, 2).validate(2));
  CHECK_NOTHROW(NoiseSpec::fw().validate(3));
  BoundaryConditions bc{{0.0}, {1.0}, 0.0};
  CHECK_THROWS_AS(bc.validate(), std::invalid_argument);
}
