#pragma once

#include <cstdint>
#include <vector>

#include "mptp/drift.hpp"
#include "mptp/path.hpp"

namespace mptp {

// Approximate Markovian bridge processes pinned at x0 and xT.
//
// om_short_time (any dimension, short horizons):
//   dZ = [ (xT - Z)/(T-t) - ((T-t)/4) grad g(Z) ] dt + eps dW,
//   g(x) = |f(x)|^2 - eps div f(x)   (eps enters g to the first power)
// fw_small_noise (one dimension, small noise):
//   dZ = [ (xT - Z)/(T-t)
//          - ((T-t)/2) int_0^1 (1-u) (f^2)'(xT u + Z (1-u)) du ] dt + eps dW,
//   the integral by composite trapezoid on n_quad nodes, (f^2)' = 2 f f'.
enum class BridgeVariant { om_short_time, fw_small_noise };

struct BridgeConfig {
  DriftModel model;
  std::vector<double> x0, xT;
  double T = 1.0;
  double epsilon = 1e-4;  // om runs typically use 0.1, fw runs 1e-4
  int n_steps = 10000;    // uniform Euler-Maruyama steps, dt = T/n_steps
  int n_paths = 10;
  int n_quad = 64;        // fw variant quadrature nodes
  uint64_t seed = 0;
  BridgeVariant variant = BridgeVariant::fw_small_noise;

  void validate() const;
};

struct BridgeResult {
  std::vector<PathSample> paths;  // completed paths on the uniform grid
  int n_aborted = 0;              // paths dropped after a non-finite state
};

// Path i uses its own generator seeded with seed + i; the ensemble is
// reproducible from (seed, config). Each path starts at x0; the last node
// is pinned to xT bit-exactly (the Euler loop stops at t = T - dt).
BridgeResult simulate_bridge(const BridgeConfig& cfg);

// Pointwise mean; all paths must share the grid exactly.
PathSample average_paths(const std::vector<PathSample>& paths);

// Multiplicative Gaussian noise: every state entry times (1 + eta N(0,1)),
// iid per entry including the endpoints, deterministic per seed.
PathSample perturb_path(const PathSample& path, double eta, uint64_t seed);

// The fw variant's memory integral at state z (exposed for verification).
double fw_bridge_integral(const DriftModel& model, double xT, double z, int n_quad);

// grad g for the om variant: 2 J^T f - eps grad(div f).
std::vector<double> om_bridge_grad_g(const DriftModel& model, double eps,
                                     const std::vector<double>& x);

}  // namespace mptp
