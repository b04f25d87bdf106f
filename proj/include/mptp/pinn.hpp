#pragma once

#include <cstdint>
#include <vector>

#include "mptp/action.hpp"
#include "mptp/drift.hpp"
#include "mptp/nn.hpp"
#include "mptp/path.hpp"

namespace mptp {

// Optional Holder-seminorm penalty: for derivative orders 0, 1, 2 the
// empirical seminorm is the max over grid pairs of |jet difference|/|dt|^alpha;
// the regularizer is the sum of the three maxima, added with `weight`.
struct HolderRegularizer {
  double alpha = 1.0;
  double weight = 0.0;  // 0 disables the term
};

// Forward-problem setup: train a network h: [0,T] -> R^d so that the
// Euler-Lagrange residual vanishes at sampled interior times and h meets
// the boundary states.
struct ForwardConfig {
  DriftModel model;
  NoiseSpec noise;
  BoundaryConditions bc;
  int m = 1001;                    // residual sample count
  double lambda_r = 1.0;
  double lambda_b = 1.0;
  int iterations = 100000;
  double lr = 1e-4;
  uint64_t seed = 0;
  std::vector<int> hidden = {20, 20, 20, 20};
  HolderRegularizer reg;
  int output_nodes = 1001;         // uniform grid for the returned path
  int history_stride = 1;          // record every k-th iteration

  void validate() const;
};

struct TrainRecord {
  int iteration = 0;
  double total = 0.0, residual = 0.0, boundary = 0.0, regularizer = 0.0;
};

struct LossComponents {
  double total = 0.0, residual = 0.0, boundary = 0.0, regularizer = 0.0;
};

struct ForwardResult {
  MlpParams net;
  PathSample path;
  std::vector<TrainRecord> history;
  bool diverged = false;
  int diverged_at = -1;
};

// iid uniform draws on the open interval (0,T), deterministic per seed.
std::vector<double> sample_residual_points(int m, double T, uint64_t seed);

// Empirical Holder estimate over an explicit time grid (>= 2 distinct
// points; duplicates rejected). Jets supply the three derivative orders.
double holder_regularizer(const MlpParams& net, const std::vector<double>& grid, double alpha);

// total = lambda_r/m sum_j |h''(t_j) - rhs(h,h')|^2
//       + lambda_b/2 (|h(0)-x0|^2 + |h(T)-xT|^2) + weight * R(h).
// The regularizer grid is the residual points plus both endpoints.
class PinnLoss : public DifferentiableLoss {
 public:
  PinnLoss(const ForwardConfig& cfg, std::vector<double> points);

  double eval(const MlpParams& net, const std::vector<double>& aux) const override;
  double eval_grad(const MlpParams& net, const std::vector<double>& aux,
                   std::vector<double>& grad_net, std::vector<double>& grad_aux) const override;

  LossComponents components(const MlpParams& net) const;
  LossComponents eval_grad_components(const MlpParams& net, std::vector<double>& grad) const;
  const std::vector<double>& points() const { return points_; }

 private:
  ForwardConfig cfg_;
  ElResidualSpec spec_;
  std::vector<double> points_;
  std::vector<double> reg_grid_;
};

LossComponents empirical_loss(const MlpParams& net, const ForwardConfig& cfg,
                              const std::vector<double>& points);

// Full-batch Adam on the (optionally regularized) empirical loss. Network
// weights start from mlp_init(seed); the residual sample uses seed+1.
// Non-finite loss aborts training; the result keeps the last finite state.
ForwardResult train_forward(const ForwardConfig& cfg);

}  // namespace mptp
