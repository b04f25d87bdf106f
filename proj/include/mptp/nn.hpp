#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mptp {

// Fully connected tanh network with a linear output layer, parameters packed
// into one flat array: for each weight layer l = 1..L, the n_l x n_{l-1}
// weight matrix (row-major) followed by the n_l bias vector. The flat layout
// is what the optimizer and the checkpoint format operate on.
struct MlpParams {
  std::vector<int> layer_dims;  // [n_0, ..., n_L]
  std::vector<double> data;

  int n_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
  int n_in() const { return layer_dims.front(); }
  int n_out() const { return layer_dims.back(); }
  size_t n_data() const;

  size_t weight_offset(int layer) const;  // layer in [1, L]
  size_t bias_offset(int layer) const;

  void validate() const;
};

// Truncated-normal init: weights drawn from normal(0, 1/sqrt(n_{l-1})) with
// rejection outside two standard deviations, biases zero. Deterministic for a
// fixed seed.
MlpParams mlp_init(const std::vector<int>& layer_dims, uint64_t seed);

// Value, first and second time derivative of the network output.
struct Jet2 {
  std::vector<double> value;
  std::vector<double> d1;
  std::vector<double> d2;
};

// Reusable forward/backward workspace for second-order jets of a scalar-input
// network. forward() stores everything backward() needs, so a
// forward/backward pair per evaluation point costs no allocation.
class JetEval {
 public:
  explicit JetEval(const std::vector<int>& layer_dims);

  void forward(const MlpParams& params, double t);

  const double* value() const { return out_v_; }
  const double* d1() const { return out_1_; }
  const double* d2() const { return out_2_; }

  // Accumulates d(loss)/d(params) into grad (size params.n_data()) given the
  // adjoints of the output jet channels (each size n_L; null means zero).
  void backward(const MlpParams& params, const double* adj_value, const double* adj_d1,
                const double* adj_d2, double* grad);

 private:
  std::vector<int> dims_;
  // Per hidden layer: pre-activation first/second derivative channels and the
  // activation jets plus tanh values needed by the reverse sweep.
  std::vector<double> pre1_, pre2_, act_v_, act_1_, act_2_, tanh_p_;
  std::vector<size_t> off_;  // per-layer offsets into the buffers above
  std::vector<double> adj_a_, adj_b_;  // ping-pong adjoint buffers (3 channels)
  double input_ = 0.0;
  const double *out_v_ = nullptr, *out_1_ = nullptr, *out_2_ = nullptr;
  std::vector<double> out_buf_;
};

// One-call convenience wrapper around JetEval.
Jet2 mlp_jet2(const MlpParams& params, double t);

// Plain forward pass (value channel only); bit-identical to the jet value.
std::vector<double> mlp_eval(const MlpParams& params, double t);

// Scalar loss of (network, auxiliary parameters) with an analytic gradient.
// eval_grad returns the loss value and fills both gradients (resized and
// zeroed by the callee).
class DifferentiableLoss {
 public:
  virtual ~DifferentiableLoss() = default;
  virtual int aux_dim() const { return 0; }
  virtual double eval(const MlpParams& net, const std::vector<double>& aux) const = 0;
  virtual double eval_grad(const MlpParams& net, const std::vector<double>& aux,
                           std::vector<double>& grad_net, std::vector<double>& grad_aux) const = 0;
};

struct LossGrad {
  double value = 0.0;
  std::vector<double> grad_params;
  std::vector<double> grad_aux;
  bool finite = true;  // false signals divergence to the caller
};

LossGrad loss_grad(const DifferentiableLoss& loss, const MlpParams& net,
                   const std::vector<double>& aux);

// Central-difference gradient of the same loss, the test oracle for
// eval_grad implementations.
LossGrad numeric_loss_grad(const DifferentiableLoss& loss, const MlpParams& net,
                           const std::vector<double>& aux, double step = 1e-6);

struct AdamState {
  std::vector<double> m, v;
  long k = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr = 1e-4;
  double beta1_pow = 1.0, beta2_pow = 1.0;

  explicit AdamState(size_t n, double lr_ = 1e-4) : m(n, 0.0), v(n, 0.0), lr(lr_) {}
};

// In-place bias-corrected Adam update.
void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grad);

// Checkpoint I/O; load reproduces the saved network bit-exactly.
void save_checkpoint(const MlpParams& params, const std::string& file);
MlpParams load_checkpoint(const std::string& file);

}  // namespace mptp
