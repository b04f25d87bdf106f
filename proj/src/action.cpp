#include "mptp/action.hpp"

#include <cmath>
#include <stdexcept>

namespace mptp {

namespace {

// a2[k] = squared amplitude; fw uses 1 and skips the divergence term.
void fill_a2(const ElResidualSpec& spec, std::vector<double>& a2) {
  const int d = spec.dim();
  a2.resize(d);
  if (spec.noise.framework == Framework::fw) {
    for (int k = 0; k < d; ++k) a2[k] = 1.0;
  } else {
    for (int k = 0; k < d; ++k) a2[k] = spec.noise.amplitudes[k] * spec.noise.amplitudes[k];
  }
}

}  // namespace

ElResidualSpec::ElResidualSpec(DriftModel m, NoiseSpec n) : model(std::move(m)), noise(std::move(n)) {
  noise.validate(model.dim);
}

void el_rhs(const ElResidualSpec& spec, const double* z, const double* zdot, double* rhs,
            ElWorkspace& ws) {
  const int d = spec.dim();
  const bool om = spec.noise.framework == Framework::om;
  ws.f.resize(d);
  ws.jac.resize(d * d);
  spec.model.f(z, ws.f.data());
  spec.model.jac(z, ws.jac.data());
  std::vector<double> a2;
  fill_a2(spec, a2);
  if (om) {
    ws.grad_div.resize(d);
    spec.model.grad_div(z, ws.grad_div.data());
  }
  for (int k = 0; k < d; ++k) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = a2[k] / a2[j];
      acc += zdot[j] * (ws.jac[k * d + j] - c * ws.jac[j * d + k]);
      acc += c * ws.f[j] * ws.jac[j * d + k];
    }
    if (om) acc += 0.5 * a2[k] * ws.grad_div[k];
    rhs[k] = acc;
  }
}

void el_rhs_derivs(const ElResidualSpec& spec, const double* z, const double* zdot, double* rhs,
                   double* drhs_dz, double* drhs_dzdot, ElWorkspace& ws) {
  const int d = spec.dim();
  const bool om = spec.noise.framework == Framework::om;
  el_rhs(spec, z, zdot, rhs, ws);
  ws.hess.resize(d * d * d);
  spec.model.hess(z, ws.hess.data());
  if (om) {
    ws.hess_div.resize(d * d);
    spec.model.hess_div(z, ws.hess_div.data());
  }
  std::vector<double> a2;
  fill_a2(spec, a2);
  const auto H = [&](int k, int j, int l) { return ws.hess[(k * d + j) * d + l]; };
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) {
      if (drhs_dzdot) {
        const double c = a2[k] / a2[l];
        drhs_dzdot[k * d + l] = ws.jac[k * d + l] - c * ws.jac[l * d + k];
      }
      if (drhs_dz) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
          const double c = a2[k] / a2[j];
          acc += zdot[j] * (H(k, j, l) - c * H(j, k, l));
          acc += c * (ws.jac[j * d + l] * ws.jac[j * d + k] + ws.f[j] * H(j, k, l));
        }
        if (om) acc += 0.5 * a2[k] * ws.hess_div[k * d + l];
        drhs_dz[k * d + l] = acc;
      }
    }
  }
}

void el_rhs_param_grad(const ElResidualSpec& spec, const double* z, const double* zdot,
                       double* drhs_dbeta, ElWorkspace& ws) {
  const int d = spec.dim();
  const int p = spec.model.n_params();
  const bool om = spec.noise.framework == Framework::om;
  ws.f.resize(d);
  ws.jac.resize(d * d);
  ws.dfb.resize(p * d);
  ws.djb.resize(p * d * d);
  spec.model.f(z, ws.f.data());
  spec.model.jac(z, ws.jac.data());
  spec.model.df_dbeta(z, ws.dfb.data());
  spec.model.djac_dbeta(z, ws.djb.data());
  if (om) {
    ws.dgdb.resize(p * d);
    spec.model.dgrad_div_dbeta(z, ws.dgdb.data());
  }
  std::vector<double> a2;
  fill_a2(spec, a2);
  for (int q = 0; q < p; ++q) {
    const double* fb = ws.dfb.data() + q * d;
    const double* jb = ws.djb.data() + q * d * d;
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        const double c = a2[k] / a2[j];
        acc += zdot[j] * (jb[k * d + j] - c * jb[j * d + k]);
        acc += c * (fb[j] * ws.jac[j * d + k] + ws.f[j] * jb[j * d + k]);
      }
      if (om) acc += 0.5 * a2[k] * ws.dgdb[q * d + k];
      drhs_dbeta[q * d + k] = acc;
    }
  }
}

std::vector<double> el_residual(const ElResidualSpec& spec, const std::vector<double>& z,
                                const std::vector<double>& zdot, const std::vector<double>& zddot) {
  const int d = spec.dim();
  if (static_cast<int>(z.size()) != d || static_cast<int>(zdot.size()) != d ||
      static_cast<int>(zddot.size()) != d)
    throw std::invalid_argument("el_residual: state size must match model dim");
  std::vector<double> rhs(d);
  ElWorkspace ws;
  el_rhs(spec, z.data(), zdot.data(), rhs.data(), ws);
  for (int k = 0; k < d; ++k) rhs[k] = zddot[k] - rhs[k];
  return rhs;
}

namespace {

// Trapezoid weights on a possibly non-uniform grid.
double trapezoid_weight(const std::vector<double>& t, size_t i) {
  if (i == 0) return (t[1] - t[0]) / 2;
  if (i + 1 == t.size()) return (t[i] - t[i - 1]) / 2;
  return (t[i + 1] - t[i - 1]) / 2;
}

}  // namespace

double fw_action(const PathSample& path, const DriftModel& model) {
  path.validate();
  if (path.n_nodes() < 3) throw std::invalid_argument("fw_action: need at least 3 nodes");
  if (path.dim != model.dim) throw std::invalid_argument("fw_action: dim mismatch");
  const int d = path.dim;
  const auto zdot = path_derivative(path);
  std::vector<double> f(d);
  double total = 0.0;
  for (size_t i = 0; i < path.times.size(); ++i) {
    model.f(path.state(i), f.data());
    double q = 0.0;
    for (int k = 0; k < d; ++k) {
      const double r = zdot[i * d + k] - f[k];
      q += r * r;
    }
    total += trapezoid_weight(path.times, i) * 0.5 * q;
  }
  return total;
}

double om_action(const PathSample& path, const DriftModel& model, const NoiseSpec& noise) {
  path.validate();
  if (path.n_nodes() < 3) throw std::invalid_argument("om_action: need at least 3 nodes");
  if (path.dim != model.dim) throw std::invalid_argument("om_action: dim mismatch");
  if (noise.framework != Framework::om)
    throw std::invalid_argument("om_action: diagonal amplitudes required");
  noise.validate(model.dim);
  const int d = path.dim;
  const auto zdot = path_derivative(path);
  std::vector<double> f(d);
  double total = 0.0;
  for (size_t i = 0; i < path.times.size(); ++i) {
    const double* z = path.state(i);
    model.f(z, f.data());
    double q = model.div(z);
    for (int k = 0; k < d; ++k) {
      const double r = zdot[i * d + k] - f[k];
      const double a = noise.amplitudes[k];
      q += r * r / (a * a);
    }
    total += trapezoid_weight(path.times, i) * 0.5 * q;
  }
  return total;
}

double fw_energy(const DriftModel& model, const std::vector<double>& z,
                 const std::vector<double>& zdot) {
  const int d = model.dim;
  if (static_cast<int>(z.size()) != d || static_cast<int>(zdot.size()) != d)
    throw std::invalid_argument("fw_energy: state size must match model dim");
  std::vector<double> f(d);
  model.f(z.data(), f.data());
  double e = 0.0;
  for (int k = 0; k < d; ++k) e += 0.5 * zdot[k] * zdot[k] - 0.5 * f[k] * f[k];
  return e;
}

std::vector<double> fw_energy_profile(const DriftModel& model, const PathSample& path) {
  path.validate();
  if (path.dim != model.dim) throw std::invalid_argument("fw_energy_profile: dim mismatch");
  const int d = path.dim;
  const auto zdot = path_derivative(path);
  std::vector<double> f(d), out(path.n_nodes());
  for (size_t i = 0; i < path.times.size(); ++i) {
    model.f(path.state(i), f.data());
    double e = 0.0;
    for (int k = 0; k < d; ++k) e += 0.5 * zdot[i * d + k] * zdot[i * d + k] - 0.5 * f[k] * f[k];
    out[i] = e;
  }
  return out;
}

}  // namespace mptp
