#include "mptp/inverse.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "mptp/pinn.hpp"

namespace mptp {

namespace {

bool all_finite(const double* v, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

}  // namespace

void ObservationSet::validate() const {
  if (dim < 1) throw std::invalid_argument("observation dim must be positive");
  const int n = n_obs();
  if (n < 2) throw std::invalid_argument("need at least two observations");
  for (int i = 0; i + 1 < n; ++i)
    if (!(times[i] < times[i + 1]))
      throw std::invalid_argument("observation times must be strictly increasing");
  if (states.size() != static_cast<size_t>(n) * dim)
    throw std::invalid_argument("observation state count does not match times");
  if (!all_finite(states.data(), states.size()) || !all_finite(times.data(), times.size()))
    throw std::invalid_argument("observations must be finite");
  if (anchor_x.size() != anchor_f.size())
    throw std::invalid_argument("anchor points and values must pair up");
  if (anchor_x.size() % dim != 0)
    throw std::invalid_argument("anchor size must be a multiple of dim");
  if (!all_finite(anchor_x.data(), anchor_x.size()) ||
      !all_finite(anchor_f.data(), anchor_f.size()))
    throw std::invalid_argument("anchors must be finite");
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be non-negative");
}

double ObservationSet::uniform_step() const {
  validate();
  const int n = n_obs();
  const double tau = times[1] - times[0];
  for (int i = 1; i + 1 < n; ++i)
    if (std::abs((times[i + 1] - times[i]) - tau) > 1e-9 * std::max(1.0, std::abs(tau)))
      throw std::invalid_argument("observation grid is not uniform");
  return tau;
}

ObservationSet observe_path(const PathSample& path, int N) {
  path.validate();
  if (N < 2) throw std::invalid_argument("need at least two observation times");
  ObservationSet obs;
  obs.dim = path.dim;
  obs.times.resize(N);
  const double t0 = path.times.front(), t1 = path.times.back();
  for (int i = 0; i < N; ++i)
    obs.times[i] = t0 + (t1 - t0) * static_cast<double>(i) / (N - 1);
  obs.times.back() = t1;
  obs.states = path_resample(path, obs.times).states;
  return obs;
}

std::vector<double> fd_el_residual(const ObservationSet& obs, const ElResidualSpec& spec) {
  const double tau = obs.uniform_step();
  const int n = obs.n_obs(), d = obs.dim;
  if (n < 3) throw std::invalid_argument("need at least three observations for a residual");
  if (d != spec.dim()) throw std::invalid_argument("observation dim does not match drift");
  std::vector<double> res(static_cast<size_t>(n - 2) * d);
  std::vector<double> zdot(d), rhs(d);
  ElWorkspace ws;
  for (int i = 1; i + 1 < n; ++i) {
    const double* prev = obs.state(i - 1);
    const double* cur = obs.state(i);
    const double* next = obs.state(i + 1);
    for (int k = 0; k < d; ++k) zdot[k] = (next[k] - prev[k]) / (2.0 * tau);
    el_rhs(spec, cur, zdot.data(), rhs.data(), ws);
    for (int k = 0; k < d; ++k)
      res[static_cast<size_t>(i - 1) * d + k] =
          (next[k] - 2.0 * cur[k] + prev[k]) / (tau * tau) - rhs[k];
  }
  return res;
}

double fd_residual_loss(const ObservationSet& obs, const DriftModel& family,
                        const NoiseSpec& noise, std::vector<double>* grad_beta) {
  const ElResidualSpec spec(family, noise);
  const double tau = obs.uniform_step();
  const int n = obs.n_obs(), d = obs.dim, np = family.n_params();
  if (n < 3) throw std::invalid_argument("need at least three observations for a residual");
  if (d != spec.dim()) throw std::invalid_argument("observation dim does not match drift");
  if (grad_beta) grad_beta->assign(np, 0.0);
  std::vector<double> zdot(d), rhs(d), r(d), drb(static_cast<size_t>(np) * d);
  ElWorkspace ws;
  double acc = 0.0;
  const double inv = 1.0 / (n - 2);
  for (int i = 1; i + 1 < n; ++i) {
    const double* prev = obs.state(i - 1);
    const double* cur = obs.state(i);
    const double* next = obs.state(i + 1);
    for (int k = 0; k < d; ++k) zdot[k] = (next[k] - prev[k]) / (2.0 * tau);
    el_rhs(spec, cur, zdot.data(), rhs.data(), ws);
    for (int k = 0; k < d; ++k) {
      r[k] = (next[k] - 2.0 * cur[k] + prev[k]) / (tau * tau) - rhs[k];
      acc += r[k] * r[k] * inv;
    }
    if (grad_beta && np > 0) {
      el_rhs_param_grad(spec, cur, zdot.data(), drb.data(), ws);
      for (int p = 0; p < np; ++p)
        for (int k = 0; k < d; ++k)
          (*grad_beta)[p] -= 2.0 * inv * r[k] * drb[static_cast<size_t>(p) * d + k];
    }
  }
  return acc;
}

// ---- Parametric inverse ----

void ParamInverseConfig::validate(const DriftModel& family) const {
  if (family.n_params() == 0)
    throw std::invalid_argument("drift family has no parameters to recover");
  if (static_cast<int>(beta0.size()) != family.n_params())
    throw std::invalid_argument("beta0 size does not match the drift family");
  if (!(lambda_d > 0.0)) throw std::invalid_argument("lambda_d must be positive");
  if (m < 1) throw std::invalid_argument("need at least one residual point");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (history_stride < 1) throw std::invalid_argument("history stride must be positive");
  if (hidden.empty()) throw std::invalid_argument("need at least one hidden layer");
  for (int h : hidden)
    if (h < 1) throw std::invalid_argument("hidden widths must be positive");
}

ParamInverseLoss::ParamInverseLoss(DriftModel family, NoiseSpec noise, ObservationSet obs,
                                   double lambda_d, std::vector<double> residual_points)
    : family_(std::move(family)),
      noise_(std::move(noise)),
      obs_(std::move(obs)),
      lambda_d_(lambda_d),
      points_(std::move(residual_points)) {
  obs_.validate();
  noise_.validate(obs_.dim);
  if (family_.dim != obs_.dim)
    throw std::invalid_argument("drift dim does not match observations");
  if (family_.n_params() == 0)
    throw std::invalid_argument("drift family has no parameters to recover");
  if (!(lambda_d_ > 0.0)) throw std::invalid_argument("lambda_d must be positive");
  if (points_.empty()) throw std::invalid_argument("need at least one residual point");
  for (double s : points_)
    if (!(s > obs_.times.front()) || !(s < obs_.times.back()))
      throw std::invalid_argument("residual points must lie strictly inside the data span");
}

ParamInverseLoss::Components ParamInverseLoss::components(const MlpParams& net,
                                                          const std::vector<double>& beta) const {
  const int d = obs_.dim;
  const ElResidualSpec spec(family_.with_beta(beta), noise_);
  ElWorkspace ws;
  const int m = static_cast<int>(points_.size());
  std::vector<double> rhs(d);
  Components c;
  for (double s : points_) {
    const Jet2 j = mlp_jet2(net, s);
    el_rhs(spec, j.value.data(), j.d1.data(), rhs.data(), ws);
    for (int k = 0; k < d; ++k) {
      const double r = j.d2[k] - rhs[k];
      c.residual += r * r / m;
    }
  }
  const int n = obs_.n_obs();
  for (int i = 0; i < n; ++i) {
    const auto h = mlp_eval(net, obs_.times[i]);
    const double* z = obs_.state(i);
    for (int k = 0; k < d; ++k) c.data += lambda_d_ * (h[k] - z[k]) * (h[k] - z[k]) / n;
  }
  c.total = c.residual + c.data;
  return c;
}

double ParamInverseLoss::eval(const MlpParams& net, const std::vector<double>& beta) const {
  return components(net, beta).total;
}

ParamInverseLoss::Components ParamInverseLoss::eval_grad_components(
    const MlpParams& net, const std::vector<double>& beta, std::vector<double>& grad_net,
    std::vector<double>& grad_beta) const {
  const int d = obs_.dim;
  const int np = family_.n_params();
  const ElResidualSpec spec(family_.with_beta(beta), noise_);
  ElWorkspace ws;
  grad_net.assign(net.data.size(), 0.0);
  grad_beta.assign(np, 0.0);
  const int m = static_cast<int>(points_.size());
  const double cr = 2.0 / m;

  JetEval jet(net.layer_dims);
  std::vector<double> rhs(d), r(d);
  std::vector<double> drz(static_cast<size_t>(d) * d), drzd(static_cast<size_t>(d) * d);
  std::vector<double> drb(static_cast<size_t>(np) * d);
  std::vector<double> av(d), a1(d), a2(d);
  Components c;
  for (double s : points_) {
    jet.forward(net, s);
    el_rhs_derivs(spec, jet.value(), jet.d1(), rhs.data(), drz.data(), drzd.data(), ws);
    for (int k = 0; k < d; ++k) {
      r[k] = jet.d2()[k] - rhs[k];
      c.residual += r[k] * r[k] / m;
    }
    for (int k = 0; k < d; ++k) {
      double sv = 0.0, sd = 0.0;
      for (int l = 0; l < d; ++l) {
        sv += drz[static_cast<size_t>(l) * d + k] * r[l];
        sd += drzd[static_cast<size_t>(l) * d + k] * r[l];
      }
      av[k] = -cr * sv;
      a1[k] = -cr * sd;
      a2[k] = cr * r[k];
    }
    jet.backward(net, av.data(), a1.data(), a2.data(), grad_net.data());
    el_rhs_param_grad(spec, jet.value(), jet.d1(), drb.data(), ws);
    for (int p = 0; p < np; ++p)
      for (int k = 0; k < d; ++k) grad_beta[p] -= cr * r[k] * drb[static_cast<size_t>(p) * d + k];
  }

  const int n = obs_.n_obs();
  const double cd = 2.0 * lambda_d_ / n;
  std::vector<double> bv(d);
  for (int i = 0; i < n; ++i) {
    jet.forward(net, obs_.times[i]);
    const double* z = obs_.state(i);
    for (int k = 0; k < d; ++k) {
      const double diff = jet.value()[k] - z[k];
      c.data += lambda_d_ * diff * diff / n;
      bv[k] = cd * diff;
    }
    jet.backward(net, bv.data(), nullptr, nullptr, grad_net.data());
  }
  c.total = c.residual + c.data;
  return c;
}

double ParamInverseLoss::eval_grad(const MlpParams& net, const std::vector<double>& beta,
                                   std::vector<double>& grad_net,
                                   std::vector<double>& grad_beta) const {
  return eval_grad_components(net, beta, grad_net, grad_beta).total;
}

ParamInverseResult train_parametric(const DriftModel& family, const NoiseSpec& noise,
                                    const ObservationSet& obs, const ParamInverseConfig& cfg) {
  cfg.validate(family);
  obs.validate();
  const int d = obs.dim;
  std::vector<int> dims;
  dims.push_back(1);
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(d);

  ParamInverseResult out;
  out.net = mlp_init(dims, cfg.seed);
  out.beta = cfg.beta0;

  const double t0 = obs.times.front(), t1 = obs.times.back();
  std::vector<double> points = sample_residual_points(cfg.m, t1 - t0, cfg.seed + 1);
  for (double& s : points) s += t0;
  ParamInverseLoss loss(family, noise, obs, cfg.lambda_d, std::move(points));

  const size_t nw = out.net.data.size();
  const size_t np = static_cast<size_t>(family.n_params());
  std::vector<double> theta(nw + np);
  std::memcpy(theta.data(), out.net.data.data(), nw * sizeof(double));
  std::memcpy(theta.data() + nw, out.beta.data(), np * sizeof(double));

  AdamState adam(theta.size(), cfg.lr);
  std::vector<double> grad(theta.size()), gnet, gbeta;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::memcpy(out.net.data.data(), theta.data(), nw * sizeof(double));
    std::memcpy(out.beta.data(), theta.data() + nw, np * sizeof(double));
    const auto c = loss.eval_grad_components(out.net, out.beta, gnet, gbeta);
    if (!std::isfinite(c.total)) {
      out.diverged = true;
      out.diverged_at = it;
      break;
    }
    if (it % cfg.history_stride == 0 || it + 1 == cfg.iterations)
      out.history.push_back({it, c.total, c.residual, c.data, out.beta});
    std::memcpy(grad.data(), gnet.data(), nw * sizeof(double));
    std::memcpy(grad.data() + nw, gbeta.data(), np * sizeof(double));
    adam_step(adam, theta, grad);
  }
  if (!out.diverged) {
    std::memcpy(out.net.data.data(), theta.data(), nw * sizeof(double));
    std::memcpy(out.beta.data(), theta.data() + nw, np * sizeof(double));
  }
  return out;
}

// ---- Nonparametric inverse ----

void NonParamConfig::validate() const {
  if (layer_dims.size() < 3 || layer_dims.front() != 1 || layer_dims.back() != 1)
    throw std::invalid_argument("drift network must map one input to one output with hidden layers");
  for (int w : layer_dims)
    if (w < 1) throw std::invalid_argument("layer widths must be positive");
  if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0))
    throw std::invalid_argument("regularizer weights must be non-negative");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (history_stride < 1) throw std::invalid_argument("history stride must be positive");
}

NonParamLoss::NonParamLoss(const ObservationSet& obs, NoiseSpec noise, double gamma1,
                           double gamma2)
    : gamma1_(gamma1), gamma2_(gamma2) {
  obs.validate();
  if (obs.dim != 1)
    throw std::invalid_argument("nonparametric drift recovery supports one dimension");
  noise.validate(1);
  if (obs.n_obs() < 3) throw std::invalid_argument("need at least three observations");
  if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0))
    throw std::invalid_argument("regularizer weights must be non-negative");
  const double tau = obs.uniform_step();
  const int n = obs.n_obs();
  z_.resize(n - 2);
  d2z_.resize(n - 2);
  for (int i = 1; i + 1 < n; ++i) {
    z_[i - 1] = obs.states[i];
    d2z_[i - 1] = (obs.states[i + 1] - 2.0 * obs.states[i] + obs.states[i - 1]) / (tau * tau);
  }
  anchor_x_ = obs.anchor_x;
  anchor_f_ = obs.anchor_f;
  if (noise.framework == Framework::om)
    half_a2_ = 0.5 * noise.amplitudes[0] * noise.amplitudes[0];
}

NonParamLoss::Components NonParamLoss::components(const MlpParams& net) const {
  Components c;
  const int n = static_cast<int>(z_.size());
  for (int i = 0; i < n; ++i) {
    const Jet2 j = mlp_jet2(net, z_[i]);
    const double r = d2z_[i] - (j.value[0] * j.d1[0] + half_a2_ * j.d2[0]);
    c.ode += r * r / n;
  }
  const int na = static_cast<int>(anchor_x_.size());
  for (int i = 0; i < na; ++i) {
    const Jet2 j = mlp_jet2(net, anchor_x_[i]);
    c.drift += gamma1_ * (j.value[0] - anchor_f_[i]) * (j.value[0] - anchor_f_[i]) / na;
  }
  if (gamma2_ > 0.0) {
    double w2 = 0.0;
    for (int l = 1; l <= net.n_layers(); ++l) {
      const double* w = net.data.data() + net.weight_offset(l);
      const size_t nw = static_cast<size_t>(net.layer_dims[l - 1]) * net.layer_dims[l];
      for (size_t i = 0; i < nw; ++i) w2 += w[i] * w[i];
    }
    c.reg = gamma2_ * w2;
  }
  c.total = c.ode + c.drift + c.reg;
  return c;
}

double NonParamLoss::eval(const MlpParams& net, const std::vector<double>&) const {
  return components(net).total;
}

NonParamLoss::Components NonParamLoss::eval_grad_components(const MlpParams& net,
                                                            std::vector<double>& grad) const {
  grad.assign(net.data.size(), 0.0);
  Components c;
  const int n = static_cast<int>(z_.size());
  JetEval jet(net.layer_dims);
  for (int i = 0; i < n; ++i) {
    jet.forward(net, z_[i]);
    const double v = jet.value()[0], d1 = jet.d1()[0], d2 = jet.d2()[0];
    const double r = d2z_[i] - (v * d1 + half_a2_ * d2);
    c.ode += r * r / n;
    const double cr = -2.0 * r / n;
    const double av = cr * d1, a1 = cr * v, a2 = cr * half_a2_;
    jet.backward(net, &av, &a1, &a2, grad.data());
  }
  const int na = static_cast<int>(anchor_x_.size());
  for (int i = 0; i < na; ++i) {
    jet.forward(net, anchor_x_[i]);
    const double diff = jet.value()[0] - anchor_f_[i];
    c.drift += gamma1_ * diff * diff / na;
    const double av = 2.0 * gamma1_ * diff / na;
    jet.backward(net, &av, nullptr, nullptr, grad.data());
  }
  if (gamma2_ > 0.0) {
    double w2 = 0.0;
    for (int l = 1; l <= net.n_layers(); ++l) {
      const size_t off = net.weight_offset(l);
      const size_t nw = static_cast<size_t>(net.layer_dims[l - 1]) * net.layer_dims[l];
      for (size_t i = 0; i < nw; ++i) {
        w2 += net.data[off + i] * net.data[off + i];
        grad[off + i] += 2.0 * gamma2_ * net.data[off + i];
      }
    }
    c.reg = gamma2_ * w2;
  }
  c.total = c.ode + c.drift + c.reg;
  return c;
}

double NonParamLoss::eval_grad(const MlpParams& net, const std::vector<double>&,
                               std::vector<double>& grad_net,
                               std::vector<double>& grad_aux) const {
  grad_aux.clear();
  return eval_grad_components(net, grad_net).total;
}

NonParamResult train_nonparametric(const ObservationSet& obs, const NoiseSpec& noise,
                                   const NonParamConfig& cfg) {
  cfg.validate();
  NonParamLoss loss(obs, noise, cfg.gamma1, cfg.gamma2);
  NonParamResult out;
  out.net = mlp_init(cfg.layer_dims, cfg.seed);
  AdamState adam(out.net.data.size(), cfg.lr);
  std::vector<double> grad;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto c = loss.eval_grad_components(out.net, grad);
    if (!std::isfinite(c.total)) {
      out.diverged = true;
      out.diverged_at = it;
      break;
    }
    if (it % cfg.history_stride == 0 || it + 1 == cfg.iterations)
      out.history.push_back({it, c.total, c.ode, c.drift, c.reg});
    adam_step(adam, out.net.data, grad);
  }
  return out;
}

}  // namespace mptp
