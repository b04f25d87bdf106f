#include "mptp/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mptp {

void ForwardConfig::validate() const {
  noise.validate(model.dim);
  bc.validate();
  if (static_cast<int>(bc.x0.size()) != model.dim)
    throw std::invalid_argument("forward config: boundary dim must match model");
  if (m < 1) throw std::invalid_argument("forward config: m must be >= 1");
  if (lambda_r <= 0 || lambda_b <= 0)
    throw std::invalid_argument("forward config: loss weights must be positive");
  if (iterations < 0) throw std::invalid_argument("forward config: iterations must be >= 0");
  if (lr <= 0) throw std::invalid_argument("forward config: lr must be positive");
  if (hidden.empty()) throw std::invalid_argument("forward config: need at least one hidden layer");
  for (int h : hidden)
    if (h < 1) throw std::invalid_argument("forward config: hidden widths must be >= 1");
  if (reg.alpha <= 0 || reg.alpha > 1)
    throw std::invalid_argument("forward config: alpha must be in (0,1]");
  if (reg.weight < 0) throw std::invalid_argument("forward config: regularizer weight must be >= 0");
  if (output_nodes < 2) throw std::invalid_argument("forward config: output grid needs >= 2 nodes");
  if (history_stride < 1) throw std::invalid_argument("forward config: history stride must be >= 1");
}

std::vector<double> sample_residual_points(int m, double T, uint64_t seed) {
  if (m < 0) throw std::invalid_argument("sample_residual_points: m must be >= 0");
  if (T <= 0) throw std::invalid_argument("sample_residual_points: T must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, T);
  std::vector<double> out(m);
  for (auto& t : out) {
    do {
      t = u(rng);
    } while (t <= 0.0 || t >= T);
  }
  return out;
}

namespace {

// Jets at every grid node, channels[o][i*d+k] for order o in {0,1,2}.
struct GridJets {
  std::vector<double> ch[3];
};

void eval_grid_jets(JetEval& ws, const MlpParams& net, const std::vector<double>& grid,
                    GridJets& jets) {
  const int d = net.n_out();
  for (auto& c : jets.ch) c.resize(grid.size() * d);
  for (size_t i = 0; i < grid.size(); ++i) {
    ws.forward(net, grid[i]);
    for (int k = 0; k < d; ++k) {
      jets.ch[0][i * d + k] = ws.value()[k];
      jets.ch[1][i * d + k] = ws.d1()[k];
      jets.ch[2][i * d + k] = ws.d2()[k];
    }
  }
}

struct HolderTerm {
  double value = 0.0;  // max quotient for one derivative order
  size_t i = 0, j = 0;
  std::vector<double> direction;  // (jet_i - jet_j)/|jet_i - jet_j|
};

HolderTerm holder_term(const std::vector<double>& grid, const std::vector<double>& ch, int d,
                       double alpha) {
  HolderTerm best;
  for (size_t i = 0; i + 1 < grid.size(); ++i)
    for (size_t j = i + 1; j < grid.size(); ++j) {
      double nrm = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = ch[i * d + k] - ch[j * d + k];
        nrm += diff * diff;
      }
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) continue;
      const double q = nrm / std::pow(std::abs(grid[i] - grid[j]), alpha);
      if (q > best.value) {
        best.value = q;
        best.i = i;
        best.j = j;
      }
    }
  if (best.value > 0.0) {
    best.direction.resize(d);
    double nrm = 0.0;
    for (int k = 0; k < d; ++k) {
      best.direction[k] = ch[best.i * d + k] - ch[best.j * d + k];
      nrm += best.direction[k] * best.direction[k];
    }
    nrm = std::sqrt(nrm);
    for (int k = 0; k < d; ++k) best.direction[k] /= nrm;
  }
  return best;
}

void check_distinct(const std::vector<double>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("holder grid needs >= 2 points");
  auto sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i + 1 < sorted.size(); ++i)
    if (sorted[i] == sorted[i + 1])
      throw std::invalid_argument("holder grid has duplicate times");
}

}  // namespace

double holder_regularizer(const MlpParams& net, const std::vector<double>& grid, double alpha) {
  if (alpha <= 0 || alpha > 1) throw std::invalid_argument("holder alpha must be in (0,1]");
  check_distinct(grid);
  JetEval ws(net.layer_dims);
  GridJets jets;
  eval_grid_jets(ws, net, grid, jets);
  double total = 0.0;
  for (const auto& ch : jets.ch) total += holder_term(grid, ch, net.n_out(), alpha).value;
  return total;
}

PinnLoss::PinnLoss(const ForwardConfig& cfg, std::vector<double> points)
    : cfg_(cfg), spec_(cfg.model, cfg.noise), points_(std::move(points)) {
  cfg_.validate();
  for (double t : points_)
    if (!(t > 0.0 && t < cfg_.bc.T))
      throw std::invalid_argument("residual points must lie inside (0,T)");
  if (points_.empty()) throw std::invalid_argument("need at least one residual point");
  if (cfg_.reg.weight > 0) {
    reg_grid_ = points_;
    reg_grid_.push_back(0.0);
    reg_grid_.push_back(cfg_.bc.T);
    std::sort(reg_grid_.begin(), reg_grid_.end());
    check_distinct(reg_grid_);
  }
}

double PinnLoss::eval(const MlpParams& net, const std::vector<double>&) const {
  return components(net).total;
}

LossComponents PinnLoss::components(const MlpParams& net) const {
  if (net.n_in() != 1 || net.n_out() != spec_.dim())
    throw std::invalid_argument("pinn loss: network must map 1 -> model dim");
  const int d = spec_.dim();
  JetEval ws(net.layer_dims);
  ElWorkspace ews;
  std::vector<double> rhs(d);
  LossComponents out;
  for (double t : points_) {
    ws.forward(net, t);
    el_rhs(spec_, ws.value(), ws.d1(), rhs.data(), ews);
    for (int k = 0; k < d; ++k) {
      const double r = ws.d2()[k] - rhs[k];
      out.residual += r * r;
    }
  }
  out.residual *= cfg_.lambda_r / static_cast<double>(points_.size());
  ws.forward(net, 0.0);
  for (int k = 0; k < d; ++k) {
    const double b = ws.value()[k] - cfg_.bc.x0[k];
    out.boundary += b * b;
  }
  ws.forward(net, cfg_.bc.T);
  for (int k = 0; k < d; ++k) {
    const double b = ws.value()[k] - cfg_.bc.xT[k];
    out.boundary += b * b;
  }
  out.boundary *= cfg_.lambda_b / 2.0;
  if (cfg_.reg.weight > 0)
    out.regularizer = cfg_.reg.weight * holder_regularizer(net, reg_grid_, cfg_.reg.alpha);
  out.total = out.residual + out.boundary + out.regularizer;
  return out;
}

double PinnLoss::eval_grad(const MlpParams& net, const std::vector<double>&,
                           std::vector<double>& grad_net, std::vector<double>& grad_aux) const {
  grad_aux.clear();
  return eval_grad_components(net, grad_net).total;
}

LossComponents PinnLoss::eval_grad_components(const MlpParams& net,
                                              std::vector<double>& grad) const {
  if (net.n_in() != 1 || net.n_out() != spec_.dim())
    throw std::invalid_argument("pinn loss: network must map 1 -> model dim");
  const int d = spec_.dim();
  const size_t m = points_.size();
  grad.assign(net.data.size(), 0.0);
  JetEval ws(net.layer_dims);
  ElWorkspace ews;
  std::vector<double> rhs(d), drz(d * d), drzd(d * d), r(d), av(d), a1(d), a2(d);
  LossComponents out;

  const double cr = 2.0 * cfg_.lambda_r / static_cast<double>(m);
  for (double t : points_) {
    ws.forward(net, t);
    el_rhs_derivs(spec_, ws.value(), ws.d1(), rhs.data(), drz.data(), drzd.data(), ews);
    for (int k = 0; k < d; ++k) {
      r[k] = ws.d2()[k] - rhs[k];
      out.residual += r[k] * r[k];
    }
    for (int k = 0; k < d; ++k) {
      a2[k] = cr * r[k];
      double gz = 0.0, gzd = 0.0;
      for (int l = 0; l < d; ++l) {
        gz += drz[l * d + k] * r[l];
        gzd += drzd[l * d + k] * r[l];
      }
      av[k] = -cr * gz;
      a1[k] = -cr * gzd;
    }
    ws.backward(net, av.data(), a1.data(), a2.data(), grad.data());
  }
  out.residual *= cfg_.lambda_r / static_cast<double>(m);

  for (int end = 0; end < 2; ++end) {
    const double t = end == 0 ? 0.0 : cfg_.bc.T;
    const auto& target = end == 0 ? cfg_.bc.x0 : cfg_.bc.xT;
    ws.forward(net, t);
    for (int k = 0; k < d; ++k) {
      const double b = ws.value()[k] - target[k];
      out.boundary += b * b;
      av[k] = cfg_.lambda_b * b;
    }
    ws.backward(net, av.data(), nullptr, nullptr, grad.data());
  }
  out.boundary *= cfg_.lambda_b / 2.0;

  if (cfg_.reg.weight > 0) {
    GridJets jets;
    eval_grid_jets(ws, net, reg_grid_, jets);
    std::vector<double> adj(d);
    for (int o = 0; o < 3; ++o) {
      const auto term = holder_term(reg_grid_, jets.ch[o], d, cfg_.reg.alpha);
      if (term.value == 0.0) continue;
      out.regularizer += term.value;
      const double s =
          cfg_.reg.weight / std::pow(std::abs(reg_grid_[term.i] - reg_grid_[term.j]), cfg_.reg.alpha);
      for (int side = 0; side < 2; ++side) {
        const size_t idx = side == 0 ? term.i : term.j;
        const double sign = side == 0 ? 1.0 : -1.0;
        for (int k = 0; k < d; ++k) adj[k] = sign * s * term.direction[k];
        ws.forward(net, reg_grid_[idx]);
        ws.backward(net, o == 0 ? adj.data() : nullptr, o == 1 ? adj.data() : nullptr,
                    o == 2 ? adj.data() : nullptr, grad.data());
      }
    }
    out.regularizer *= cfg_.reg.weight;
  }

  out.total = out.residual + out.boundary + out.regularizer;
  return out;
}

LossComponents empirical_loss(const MlpParams& net, const ForwardConfig& cfg,
                              const std::vector<double>& points) {
  return PinnLoss(cfg, points).components(net);
}

ForwardResult train_forward(const ForwardConfig& cfg) {
  cfg.validate();
  std::vector<int> dims;
  dims.push_back(1);
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(cfg.model.dim);

  ForwardResult out;
  out.net = mlp_init(dims, cfg.seed);
  PinnLoss loss(cfg, sample_residual_points(cfg.m, cfg.bc.T, cfg.seed + 1));
  AdamState adam(out.net.data.size(), cfg.lr);
  std::vector<double> grad;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto comps = loss.eval_grad_components(out.net, grad);
    if (it % cfg.history_stride == 0 || it + 1 == cfg.iterations)
      out.history.push_back({it, comps.total, comps.residual, comps.boundary, comps.regularizer});
    if (!std::isfinite(comps.total)) {
      out.diverged = true;
      out.diverged_at = it;
      break;
    }
    adam_step(adam, out.net.data, grad);
  }

  const int d = cfg.model.dim;
  out.path.dim = d;
  out.path.times.resize(cfg.output_nodes);
  out.path.states.resize(cfg.output_nodes * d);
  for (int i = 0; i < cfg.output_nodes; ++i) {
    const double t = cfg.bc.T * i / (cfg.output_nodes - 1);
    out.path.times[i] = t;
    const auto v = mlp_eval(out.net, t);
    for (int k = 0; k < d; ++k) out.path.states[i * d + k] = v[k];
  }
  return out;
}

}  // namespace mptp
