#pragma once

#include <cstdint>
#include <vector>

#include "mptp/action.hpp"
#include "mptp/drift.hpp"
#include "mptp/nn.hpp"
#include "mptp/path.hpp"

namespace mptp {

// Transition-path observations, optionally with pointwise drift anchors
// {(x_a, f(x_a))}. The first and last states double as boundary data.
struct ObservationSet {
  std::vector<double> times;   // strictly increasing
  std::vector<double> states;  // n_obs x dim row-major
  int dim = 1;
  std::vector<double> anchor_x;  // n_anchors x dim
  std::vector<double> anchor_f;  // n_anchors x dim
  double eta = 0.0;              // noise level the data carries (metadata)

  int n_obs() const { return static_cast<int>(times.size()); }
  int n_anchors() const { return static_cast<int>(anchor_x.size()) / (dim == 0 ? 1 : dim); }
  const double* state(int i) const { return states.data() + static_cast<size_t>(i) * dim; }
  void validate() const;
  // Grid step; throws when the grid is not uniform to ~1e-9 relative.
  double uniform_step() const;
};

// N states read off the path at uniform times across its full span.
ObservationSet observe_path(const PathSample& path, int N);

// Finite-difference Euler-Lagrange residual of the observations under the
// given drift and noise: r_i = (z_{i+1}-2z_i+z_{i-1})/tau^2 - rhs(z_i, zdot_i)
// for the N-2 interior nodes, zdot by central difference. Uniform grids only.
std::vector<double> fd_el_residual(const ObservationSet& obs, const ElResidualSpec& spec);

// Mean squared fd_el_residual as a function of the drift parameters,
// optionally with its analytic beta-gradient. No network involved: this
// probes what the data alone says about the parameters.
double fd_residual_loss(const ObservationSet& obs, const DriftModel& family,
                        const NoiseSpec& noise, std::vector<double>* grad_beta = nullptr);

// ---- Parametric inverse: joint (path network, drift parameters) fit ----

struct ParamInverseConfig {
  std::vector<double> beta0;  // initial drift parameters, one per family param
  double lambda_d = 1.0;      // data-attachment weight
  int m = 1001;               // residual points on the observation span
  int iterations = 50000;
  double lr = 1e-3;
  uint64_t seed = 0;
  std::vector<int> hidden = {20, 20, 20, 20};
  int history_stride = 100;

  void validate(const DriftModel& family) const;
};

struct ParamRecord {
  int iteration = 0;
  double total = 0.0, residual = 0.0, data = 0.0;
  std::vector<double> beta;
};

struct ParamInverseResult {
  std::vector<double> beta;
  MlpParams net;
  std::vector<ParamRecord> history;
  bool diverged = false;
  int diverged_at = -1;
};

// total = (1/m) sum_j |h''(s_j) - rhs_beta(h,h')|^2
//       + (lambda_d/N) sum_i |h(t_i) - z_i|^2, beta passed as aux.
class ParamInverseLoss : public DifferentiableLoss {
 public:
  ParamInverseLoss(DriftModel family, NoiseSpec noise, ObservationSet obs, double lambda_d,
                   std::vector<double> residual_points);

  int aux_dim() const override { return family_.n_params(); }
  double eval(const MlpParams& net, const std::vector<double>& beta) const override;
  double eval_grad(const MlpParams& net, const std::vector<double>& beta,
                   std::vector<double>& grad_net, std::vector<double>& grad_beta) const override;

  struct Components {
    double total = 0.0, residual = 0.0, data = 0.0;
  };
  Components components(const MlpParams& net, const std::vector<double>& beta) const;
  Components eval_grad_components(const MlpParams& net, const std::vector<double>& beta,
                                  std::vector<double>& grad_net,
                                  std::vector<double>& grad_beta) const;

 private:
  DriftModel family_;
  NoiseSpec noise_;
  ObservationSet obs_;
  double lambda_d_;
  std::vector<double> points_;
};

ParamInverseResult train_parametric(const DriftModel& family, const NoiseSpec& noise,
                                    const ObservationSet& obs, const ParamInverseConfig& cfg);

// ---- Nonparametric inverse: drift network through the fd residual ----

struct NonParamConfig {
  std::vector<int> layer_dims = {1, 20, 20, 20, 20, 1};
  double gamma1 = 1e4;  // drift-anchor weight
  double gamma2 = 0.0;  // weight decay (weights only, biases exempt)
  int iterations = 50000;
  double lr = 1e-3;
  uint64_t seed = 0;
  int history_stride = 100;

  void validate() const;
};

struct NonParamRecord {
  int iteration = 0;
  double total = 0.0, ode = 0.0, drift = 0.0, reg = 0.0;
};

struct NonParamResult {
  MlpParams net;
  std::vector<NonParamRecord> history;
  bool diverged = false;
  int diverged_at = -1;
};

// One-dimensional drift recovery. The network F plays f; its z-derivatives
// F', F'' come from input jets, so the fw rhs is F F' and the om rhs adds
// (a^2/2) F''. total = mean_i r_i^2 + gamma1 * anchor MSE + gamma2 * |W|^2.
class NonParamLoss : public DifferentiableLoss {
 public:
  NonParamLoss(const ObservationSet& obs, NoiseSpec noise, double gamma1, double gamma2);

  double eval(const MlpParams& net, const std::vector<double>& aux) const override;
  double eval_grad(const MlpParams& net, const std::vector<double>& aux,
                   std::vector<double>& grad_net, std::vector<double>& grad_aux) const override;

  struct Components {
    double total = 0.0, ode = 0.0, drift = 0.0, reg = 0.0;
  };
  Components components(const MlpParams& net) const;
  Components eval_grad_components(const MlpParams& net, std::vector<double>& grad) const;

 private:
  std::vector<double> z_;    // interior states
  std::vector<double> d2z_;  // second differences of the data
  std::vector<double> anchor_x_, anchor_f_;
  double half_a2_ = 0.0;  // (a^2)/2 for om, 0 for fw
  double gamma1_, gamma2_;
};

NonParamResult train_nonparametric(const ObservationSet& obs, const NoiseSpec& noise,
                                   const NonParamConfig& cfg);

}  // namespace mptp
