#include "mptp/drift.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mptp {

namespace {

void fill_zero(double* out, int n) { std::memset(out, 0, sizeof(double) * static_cast<size_t>(n)); }

}  // namespace

DriftModel DriftModel::zero(int dim) {
  if (dim < 1) throw std::invalid_argument("drift dimension must be positive");
  DriftModel m;
  m.kind = DriftKind::zero;
  m.dim = dim;
  return m;
}

DriftModel DriftModel::linear_decay(double a) {
  DriftModel m;
  m.kind = DriftKind::linear_decay;
  m.dim = 1;
  m.beta = {a};
  return m;
}

DriftModel DriftModel::double_well(double l1, double l2) {
  DriftModel m;
  m.kind = DriftKind::double_well;
  m.dim = 1;
  m.beta = {l1, l2};
  return m;
}

DriftModel DriftModel::gene_regulation(double kf, double Kd, double kd, double Rb) {
  if (!(Kd > 0.0)) throw std::invalid_argument("gene_regulation requires Kd > 0");
  DriftModel m;
  m.kind = DriftKind::gene_regulation;
  m.dim = 1;
  m.beta = {kf, Kd, kd, Rb};
  return m;
}

DriftModel DriftModel::maier_stein(double l1, double l2, double l3, double l4) {
  DriftModel m;
  m.kind = DriftKind::maier_stein;
  m.dim = 2;
  m.beta = {l1, l2, l3, l4};
  return m;
}

DriftModel DriftModel::with_beta(const std::vector<double>& b) const {
  if (b.size() != beta.size()) throw std::invalid_argument("parameter count mismatch");
  if (kind == DriftKind::gene_regulation && !(b[1] > 0.0))
    throw std::invalid_argument("gene_regulation requires Kd > 0");
  DriftModel m = *this;
  m.beta = b;
  return m;
}

std::string DriftModel::kind_name() const {
  switch (kind) {
    case DriftKind::zero: return "zero";
    case DriftKind::linear_decay: return "linear_decay";
    case DriftKind::double_well: return "double_well";
    case DriftKind::gene_regulation: return "gene_regulation";
    case DriftKind::maier_stein: return "maier_stein";
  }
  return "unknown";
}

void DriftModel::f(const double* x, double* out) const {
  switch (kind) {
    case DriftKind::zero:
      fill_zero(out, dim);
      return;
    case DriftKind::linear_decay:
      out[0] = -beta[0] * x[0];
      return;
    case DriftKind::double_well:
      out[0] = beta[0] * x[0] + beta[1] * x[0] * x[0] * x[0];
      return;
    case DriftKind::gene_regulation: {
      const double x2 = x[0] * x[0];
      const double D = x2 + beta[1];
      out[0] = beta[0] * x2 / D - beta[2] * x[0] + beta[3];
      return;
    }
    case DriftKind::maier_stein: {
      const double X = x[0], Y = x[1];
      out[0] = beta[0] * X + beta[1] * X * X * X + beta[2] * X * Y * Y;
      out[1] = beta[2] * X * X * Y + beta[3] * Y;
      return;
    }
  }
}

void DriftModel::jac(const double* x, double* out) const {
  switch (kind) {
    case DriftKind::zero:
      fill_zero(out, dim * dim);
      return;
    case DriftKind::linear_decay:
      out[0] = -beta[0];
      return;
    case DriftKind::double_well:
      out[0] = beta[0] + 3.0 * beta[1] * x[0] * x[0];
      return;
    case DriftKind::gene_regulation: {
      const double D = x[0] * x[0] + beta[1];
      out[0] = 2.0 * beta[0] * beta[1] * x[0] / (D * D) - beta[2];
      return;
    }
    case DriftKind::maier_stein: {
      const double X = x[0], Y = x[1];
      out[0] = beta[0] + 3.0 * beta[1] * X * X + beta[2] * Y * Y;
      out[1] = 2.0 * beta[2] * X * Y;
      out[2] = 2.0 * beta[2] * X * Y;
      out[3] = beta[2] * X * X + beta[3];
      return;
    }
  }
}

void DriftModel::hess(const double* x, double* out) const {
  switch (kind) {
    case DriftKind::zero:
    case DriftKind::linear_decay:
      fill_zero(out, dim * dim * dim);
      return;
    case DriftKind::double_well:
      out[0] = 6.0 * beta[1] * x[0];
      return;
    case DriftKind::gene_regulation: {
      const double x2 = x[0] * x[0];
      const double D = x2 + beta[1];
      out[0] = 2.0 * beta[0] * beta[1] * (beta[1] - 3.0 * x2) / (D * D * D);
      return;
    }
    case DriftKind::maier_stein: {
      const double X = x[0], Y = x[1];
      // component 0: d2 f1 / dx_j dx_l
      out[0] = 6.0 * beta[1] * X;   // xx
      out[1] = 2.0 * beta[2] * Y;   // xy
      out[2] = 2.0 * beta[2] * Y;   // yx
      out[3] = 2.0 * beta[2] * X;   // yy
      // component 1: d2 f2 / dx_j dx_l
      out[4] = 2.0 * beta[2] * Y;   // xx
      out[5] = 2.0 * beta[2] * X;   // xy
      out[6] = 2.0 * beta[2] * X;   // yx
      out[7] = 0.0;                 // yy
      return;
    }
  }
}

double DriftModel::div(const double* x) const {
  if (kind == DriftKind::zero) return 0.0;
  if (dim == 1) {
    double j;
    jac(x, &j);
    return j;
  }
  const double X = x[0], Y = x[1];
  return beta[0] + 3.0 * beta[1] * X * X + beta[2] * Y * Y + beta[2] * X * X + beta[3];
}

void DriftModel::grad_div(const double* x, double* out) const {
  switch (kind) {
    case DriftKind::zero:
    case DriftKind::linear_decay:
      fill_zero(out, dim);
      return;
    case DriftKind::double_well:
      out[0] = 6.0 * beta[1] * x[0];
      return;
    case DriftKind::gene_regulation:
      hess(x, out);
      return;
    case DriftKind::maier_stein:
      out[0] = (6.0 * beta[1] + 2.0 * beta[2]) * x[0];
      out[1] = 2.0 * beta[2] * x[1];
      return;
  }
}

void DriftModel::hess_div(const double* x, double* out) const {
  switch (kind) {
    case DriftKind::zero:
    case DriftKind::linear_decay:
      fill_zero(out, dim * dim);
      return;
    case DriftKind::double_well:
      out[0] = 6.0 * beta[1];
      return;
    case DriftKind::gene_regulation: {
      const double x2 = x[0] * x[0];
      const double D = x2 + beta[1];
      out[0] = 24.0 * beta[0] * beta[1] * x[0] * (x2 - beta[1]) / (D * D * D * D);
      return;
    }
    case DriftKind::maier_stein:
      out[0] = 6.0 * beta[1] + 2.0 * beta[2];
      out[1] = 0.0;
      out[2] = 0.0;
      out[3] = 2.0 * beta[2];
      return;
  }
}

void DriftModel::df_dbeta(const double* x, double* out) const {
  switch (kind) {
    case DriftKind::zero:
      return;
    case DriftKind::linear_decay:
      out[0] = -x[0];
      return;
    case DriftKind::double_well:
      out[0] = x[0];
      out[1] = x[0] * x[0] * x[0];
      return;
    case DriftKind::gene_regulation: {
      const double x2 = x[0] * x[0];
      const double D = x2 + beta[1];
      out[0] = x2 / D;
      out[1] = -beta[0] * x2 / (D * D);
      out[2] = -x[0];
      out[3] = 1.0;
      return;
    }
    case DriftKind::maier_stein: {
      const double X = x[0], Y = x[1];
      out[0] = X;          out[1] = 0.0;
      out[2] = X * X * X;  out[3] = 0.0;
      out[4] = X * Y * Y;  out[5] = X * X * Y;
      out[6] = 0.0;        out[7] = Y;
      return;
    }
  }
}

void DriftModel::djac_dbeta(const double* x, double* out) const {
  switch (kind) {
    case DriftKind::zero:
      return;
    case DriftKind::linear_decay:
      out[0] = -1.0;
      return;
    case DriftKind::double_well:
      out[0] = 1.0;
      out[1] = 3.0 * x[0] * x[0];
      return;
    case DriftKind::gene_regulation: {
      const double x2 = x[0] * x[0];
      const double D = x2 + beta[1];
      out[0] = 2.0 * beta[1] * x[0] / (D * D);
      out[1] = 2.0 * beta[0] * x[0] * (x2 - beta[1]) / (D * D * D);
      out[2] = -1.0;
      out[3] = 0.0;
      return;
    }
    case DriftKind::maier_stein: {
      const double X = x[0], Y = x[1];
      fill_zero(out, 16);
      out[0] = 1.0;                              // d jac / d l1
      out[4] = 3.0 * X * X;                      // d jac / d l2
      out[8] = Y * Y;                            // d jac / d l3
      out[9] = 2.0 * X * Y;
      out[10] = 2.0 * X * Y;
      out[11] = X * X;
      out[15] = 1.0;                             // d jac / d l4
      return;
    }
  }
}

void DriftModel::dgrad_div_dbeta(const double* x, double* out) const {
  switch (kind) {
    case DriftKind::zero:
      return;
    case DriftKind::linear_decay:
      out[0] = 0.0;
      return;
    case DriftKind::double_well:
      out[0] = 0.0;
      out[1] = 6.0 * x[0];
      return;
    case DriftKind::gene_regulation: {
      const double x2 = x[0] * x[0];
      const double D = x2 + beta[1];
      const double D3 = D * D * D;
      out[0] = 2.0 * beta[1] * (beta[1] - 3.0 * x2) / D3;
      out[1] = 2.0 * beta[0] * (-3.0 * x2 * x2 + 8.0 * beta[1] * x2 - beta[1] * beta[1]) / (D3 * D);
      out[2] = 0.0;
      out[3] = 0.0;
      return;
    }
    case DriftKind::maier_stein: {
      const double X = x[0], Y = x[1];
      out[0] = 0.0;      out[1] = 0.0;
      out[2] = 6.0 * X;  out[3] = 0.0;
      out[4] = 2.0 * X;  out[5] = 2.0 * Y;
      out[6] = 0.0;      out[7] = 0.0;
      return;
    }
  }
}

std::vector<double> DriftModel::f(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("point dimension mismatch");
  std::vector<double> out(dim);
  f(x.data(), out.data());
  return out;
}

std::vector<double> DriftModel::jac(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("point dimension mismatch");
  std::vector<double> out(dim * dim);
  jac(x.data(), out.data());
  return out;
}

std::vector<double> DriftModel::grad_div(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("point dimension mismatch");
  std::vector<double> out(dim);
  grad_div(x.data(), out.data());
  return out;
}

NoiseSpec NoiseSpec::fw() {
  NoiseSpec n;
  n.framework = Framework::fw;
  return n;
}

NoiseSpec NoiseSpec::om(std::vector<double> amplitudes) {
  NoiseSpec n;
  n.framework = Framework::om;
  n.amplitudes = std::move(amplitudes);
  return n;
}

NoiseSpec NoiseSpec::om_uniform(double a, int dim) {
  return om(std::vector<double>(static_cast<size_t>(dim), a));
}

void NoiseSpec::validate(int dim) const {
  if (framework == Framework::fw) return;
  if (static_cast<int>(amplitudes.size()) != dim)
    throw std::invalid_argument("OM noise needs one amplitude per coordinate");
  for (double a : amplitudes)
    if (!(a > 0.0)) throw std::invalid_argument("OM noise amplitudes must be positive");
}

void BoundaryConditions::validate() const {
  if (x0.empty() || x0.size() != xT.size())
    throw std::invalid_argument("boundary endpoints must share a positive dimension");
  if (!(T > 0.0)) throw std::invalid_argument("duration must be positive");
}

std::vector<Equilibrium> find_equilibria(const DriftModel& model, double lo, double hi,
                                         int n_scan) {
  if (model.dim != 1) throw std::invalid_argument("equilibrium scan supports 1D models only");
  if (n_scan < 2) throw std::invalid_argument("n_scan must be at least 2");
  if (!(hi > lo)) throw std::invalid_argument("empty bracket");

  auto eval = [&](double x) {
    double v;
    model.f(&x, &v);
    return v;
  };

  std::vector<double> roots;
  const double h = (hi - lo) / n_scan;
  double a = lo, fa = eval(a);
  for (int i = 0; i < n_scan; ++i) {
    double b = (i + 1 == n_scan) ? hi : lo + (i + 1) * h;
    double fb = eval(b);
    if (fa == 0.0) roots.push_back(a);
    if (fa * fb < 0.0) {
      double xa = a, xb = b, va = fa;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (xa + xb);
        double vm = eval(mid);
        if (std::abs(vm) <= 1e-10) {
          xa = xb = mid;
          break;
        }
        if (va * vm < 0.0) {
          xb = mid;
        } else {
          xa = mid;
          va = vm;
        }
      }
      roots.push_back(0.5 * (xa + xb));
    }
    a = b;
    fa = fb;
  }
  if (!roots.empty() && eval(hi) == 0.0) roots.push_back(hi);
  if (roots.empty() && eval(hi) == 0.0) roots.push_back(hi);

  std::sort(roots.begin(), roots.end());
  std::vector<Equilibrium> out;
  for (double r : roots) {
    if (!out.empty() && std::abs(r - out.back().x) < 1e-8) continue;
    double j;
    model.jac(&r, &j);
    out.push_back({r, j < 0.0});
  }
  return out;
}

}  // namespace mptp
