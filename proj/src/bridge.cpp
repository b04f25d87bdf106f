#include "mptp/bridge.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mptp {

void BridgeConfig::validate() const {
  if (static_cast<int>(x0.size()) != model.dim || static_cast<int>(xT.size()) != model.dim)
    throw std::invalid_argument("bridge: endpoint dim must match model");
  if (!(T > 0)) throw std::invalid_argument("bridge: T must be positive");
  if (epsilon < 0) throw std::invalid_argument("bridge: epsilon must be >= 0");
  if (n_steps < 2) throw std::invalid_argument("bridge: need at least 2 steps");
  if (n_paths < 1) throw std::invalid_argument("bridge: need at least one path");
  if (variant == BridgeVariant::fw_small_noise) {
    if (model.dim != 1)
      throw std::invalid_argument("bridge: the small-noise variant is one-dimensional");
    if (n_quad < 2) throw std::invalid_argument("bridge: need at least 2 quadrature nodes");
  }
}

double fw_bridge_integral(const DriftModel& model, double xT, double z, int n_quad) {
  if (model.dim != 1) throw std::invalid_argument("fw_bridge_integral: 1d only");
  if (n_quad < 2) throw std::invalid_argument("fw_bridge_integral: need >= 2 nodes");
  const double du = 1.0 / (n_quad - 1);
  double acc = 0.0;
  double f, fp;
  for (int j = 0; j < n_quad; ++j) {
    const double u = j * du;
    const double w = xT * u + z * (1.0 - u);
    model.f(&w, &f);
    model.jac(&w, &fp);
    const double integrand = (1.0 - u) * 2.0 * f * fp;
    acc += (j == 0 || j == n_quad - 1 ? 0.5 : 1.0) * integrand;
  }
  return acc * du;
}

std::vector<double> om_bridge_grad_g(const DriftModel& model, double eps,
                                     const std::vector<double>& x) {
  const int d = model.dim;
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("om_bridge_grad_g: dim mismatch");
  std::vector<double> f(d), jac(d * d), gd(d), out(d);
  model.f(x.data(), f.data());
  model.jac(x.data(), jac.data());
  model.grad_div(x.data(), gd.data());
  for (int k = 0; k < d; ++k) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += 2.0 * jac[j * d + k] * f[j];
    out[k] = acc - eps * gd[k];
  }
  return out;
}

BridgeResult simulate_bridge(const BridgeConfig& cfg) {
  cfg.validate();
  const int d = cfg.model.dim;
  const int n = cfg.n_steps;
  const double dt = cfg.T / n;
  const double sq_dt = std::sqrt(dt);

  BridgeResult out;
  out.paths.reserve(cfg.n_paths);
  std::vector<double> z(d), drift(d), gg;
  for (int p = 0; p < cfg.n_paths; ++p) {
    std::mt19937_64 rng(cfg.seed + static_cast<uint64_t>(p));
    std::normal_distribution<double> gauss(0.0, 1.0);
    PathSample path;
    path.dim = d;
    path.times.resize(n + 1);
    path.states.resize((n + 1) * d);
    for (int i = 0; i <= n; ++i) path.times[i] = cfg.T * i / n;
    z = cfg.x0;
    for (int k = 0; k < d; ++k) path.states[k] = z[k];
    bool finite = true;
    for (int k = 0; k + 1 < n && finite; ++k) {
      const double t = path.times[k];
      const double rem = cfg.T - t;
      if (cfg.variant == BridgeVariant::om_short_time) {
        gg = om_bridge_grad_g(cfg.model, cfg.epsilon, z);
        for (int c = 0; c < d; ++c) drift[c] = (cfg.xT[c] - z[c]) / rem - 0.25 * rem * gg[c];
      } else {
        drift[0] = (cfg.xT[0] - z[0]) / rem -
                   0.5 * rem * fw_bridge_integral(cfg.model, cfg.xT[0], z[0], cfg.n_quad);
      }
      for (int c = 0; c < d; ++c) {
        z[c] += drift[c] * dt + cfg.epsilon * sq_dt * gauss(rng);
        if (!std::isfinite(z[c])) finite = false;
        path.states[(k + 1) * d + c] = z[c];
      }
    }
    if (!finite) {
      ++out.n_aborted;
      continue;
    }
    for (int c = 0; c < d; ++c) path.states[n * d + c] = cfg.xT[c];
    out.paths.push_back(std::move(path));
  }
  return out;
}

PathSample average_paths(const std::vector<PathSample>& paths) {
  if (paths.empty()) throw std::invalid_argument("average_paths: empty ensemble");
  const auto& first = paths.front();
  for (const auto& p : paths) {
    if (p.dim != first.dim || p.times != first.times)
      throw std::invalid_argument("average_paths: grids must match");
    if (p.states.size() != first.states.size())
      throw std::invalid_argument("average_paths: grids must match");
  }
  PathSample mean = first;
  for (size_t i = 1; i < paths.size(); ++i)
    for (size_t j = 0; j < mean.states.size(); ++j) mean.states[j] += paths[i].states[j];
  for (auto& s : mean.states) s /= static_cast<double>(paths.size());
  return mean;
}

PathSample perturb_path(const PathSample& path, double eta, uint64_t seed) {
  path.validate();
  if (eta < 0) throw std::invalid_argument("perturb_path: eta must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PathSample out = path;
  for (auto& s : out.states) s *= 1.0 + eta * gauss(rng);
  return out;
}

}  // namespace mptp
