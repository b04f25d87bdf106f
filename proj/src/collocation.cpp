#include "mptp/collocation.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace mptp {

namespace {

// Solves A X = B in place for a small dense d x d system, B holding nrhs
// columns row-major (B[r*nrhs + c]). Gaussian elimination, partial pivoting.
void small_solve(int d, std::vector<double>& A, double* B, int nrhs) {
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(A[r * d + col]) > std::abs(A[piv * d + col])) piv = r;
    if (piv != col) {
      for (int c = 0; c < d; ++c) std::swap(A[col * d + c], A[piv * d + c]);
      for (int c = 0; c < nrhs; ++c) std::swap(B[col * nrhs + c], B[piv * nrhs + c]);
    }
    const double diag = A[col * d + col];
    for (int r = col + 1; r < d; ++r) {
      const double m = A[r * d + col] / diag;
      if (m == 0.0) continue;
      for (int c = col; c < d; ++c) A[r * d + c] -= m * A[col * d + c];
      for (int c = 0; c < nrhs; ++c) B[r * nrhs + c] -= m * B[col * nrhs + c];
    }
  }
  for (int col = d - 1; col >= 0; --col) {
    const double diag = A[col * d + col];
    for (int c = 0; c < nrhs; ++c) {
      double acc = B[col * nrhs + c];
      for (int k = col + 1; k < d; ++k) acc -= A[col * d + k] * B[k * nrhs + c];
      B[col * nrhs + c] = acc / diag;
    }
  }
}

// C -= A * B for d x d row-major blocks.
void mat_mul_sub(int d, const double* A, const double* B, double* C) {
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += A[i * d + k] * B[k * d + j];
      C[i * d + j] -= acc;
    }
}

// y -= A * x for a d x d block and d-vectors.
void mat_vec_sub(int d, const double* A, const double* x, double* y) {
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k) acc += A[i * d + k] * x[k];
    y[i] -= acc;
  }
}

struct DiscreteSystem {
  const ElResidualSpec& spec;
  const BoundaryConditions& bc;
  int n;       // interior nodes
  double tau;  // grid spacing
  double scale;  // homotopy factor on the rhs

  int dim() const { return spec.dim(); }

  // states: (n+2) x d row-major including endpoints. R: n x d.
  void residuals(const std::vector<double>& states, std::vector<double>& R,
                 ElWorkspace& ws) const {
    const int d = dim();
    R.resize(n * d);
    std::vector<double> zdot(d), rhs(d);
    for (int i = 1; i <= n; ++i) {
      const double* zm = states.data() + (i - 1) * d;
      const double* z0 = states.data() + i * d;
      const double* zp = states.data() + (i + 1) * d;
      for (int k = 0; k < d; ++k) zdot[k] = (zp[k] - zm[k]) / (2 * tau);
      el_rhs(spec, z0, zdot.data(), rhs.data(), ws);
      for (int k = 0; k < d; ++k)
        R[(i - 1) * d + k] = (zp[k] - 2 * z0[k] + zm[k]) / (tau * tau) - scale * rhs[k];
    }
  }

  // Newton step: solve J delta = -R with the block-tridiagonal Jacobian
  //   A_i = I/tau^2 + (scale/(2 tau)) drhs_dzdot
  //   B_i = -2I/tau^2 - scale drhs_dz
  //   C_i = I/tau^2 - (scale/(2 tau)) drhs_dzdot
  // by block forward elimination and back substitution.
  void newton_direction(const std::vector<double>& states, const std::vector<double>& R,
                        std::vector<double>& delta, ElWorkspace& ws) const {
    const int d = dim();
    const int dd = d * d;
    std::vector<double> E(n * dd);       // D_i^{-1} C_i
    std::vector<double> y(n * d);        // D_i^{-1} (-R_i - A_i y_{i-1})
    std::vector<double> zdot(d), rhs(d), drz(dd), drzd(dd);
    std::vector<double> A(dd), D(dd), C(dd);
    for (int i = 1; i <= n; ++i) {
      const double* zm = states.data() + (i - 1) * d;
      const double* z0 = states.data() + i * d;
      const double* zp = states.data() + (i + 1) * d;
      for (int k = 0; k < d; ++k) zdot[k] = (zp[k] - zm[k]) / (2 * tau);
      el_rhs_derivs(spec, z0, zdot.data(), rhs.data(), drz.data(), drzd.data(), ws);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          const double eye = r == c ? 1.0 / (tau * tau) : 0.0;
          A[r * d + c] = eye + scale * drzd[r * d + c] / (2 * tau);
          D[r * d + c] = (r == c ? -2.0 / (tau * tau) : 0.0) - scale * drz[r * d + c];
          C[r * d + c] = eye - scale * drzd[r * d + c] / (2 * tau);
        }
      const int j = i - 1;
      double* yj = y.data() + j * d;
      for (int k = 0; k < d; ++k) yj[k] = -R[j * d + k];
      if (j > 0) {
        mat_mul_sub(d, A.data(), E.data() + (j - 1) * dd, D.data());
        mat_vec_sub(d, A.data(), y.data() + (j - 1) * d, yj);
      }
      std::memcpy(E.data() + j * dd, C.data(), dd * sizeof(double));
      std::vector<double> lu = D;
      small_solve(d, lu, E.data() + j * dd, d);
      lu = D;
      small_solve(d, lu, yj, 1);
    }
    delta.assign(n * d, 0.0);
    for (int j = n - 1; j >= 0; --j) {
      double* dj = delta.data() + j * d;
      for (int k = 0; k < d; ++k) dj[k] = y[j * d + k];
      if (j + 1 < n) mat_vec_sub(d, E.data() + j * dd, delta.data() + (j + 1) * d, dj);
    }
  }
};

double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Damped Newton at a fixed homotopy scale. Returns true on residual <= tol.
bool newton_solve(const DiscreteSystem& sys, std::vector<double>& states, double tol,
                  int max_iters, int& iters_used, double& res_norm) {
  const int d = sys.dim();
  const int n = sys.n;
  ElWorkspace ws;
  std::vector<double> R, delta, trial(states.size()), Rt;
  sys.residuals(states, R, ws);
  res_norm = max_norm(R);
  for (int it = 0; it < max_iters; ++it) {
    if (res_norm <= tol) return true;
    sys.newton_direction(states, R, delta, ws);
    if (!all_finite(delta)) return false;
    double lambda = 1.0;
    bool improved = false;
    for (int h = 0; h <= 30; ++h) {
      trial = states;
      for (int i = 0; i < n * d; ++i) trial[(i / d + 1) * d + i % d] += lambda * delta[i];
      sys.residuals(trial, Rt, ws);
      const double tn = max_norm(Rt);
      if (std::isfinite(tn) && tn < res_norm) {
        states.swap(trial);
        R.swap(Rt);
        res_norm = tn;
        improved = true;
        break;
      }
      lambda /= 2;
    }
    ++iters_used;
    if (!improved) return false;
  }
  return res_norm <= tol;
}

}  // namespace

CollocationResult solve_el_collocation(const CollocationProblem& p, const PathSample* init) {
  if (p.n < 3) throw std::invalid_argument("collocation: need at least 3 interior nodes");
  if (p.tol <= 0) throw std::invalid_argument("collocation: tol must be positive");
  p.bc.validate();
  const int d = p.spec.dim();
  if (static_cast<int>(p.bc.x0.size()) != d)
    throw std::invalid_argument("collocation: boundary dim mismatch");

  const int n = p.n;
  const int total = n + 2;
  const double tau = p.bc.T / (n + 1);

  PathSample path = PathSample::straight_line(p.bc.x0, p.bc.xT, p.bc.T, total);
  if (init) {
    init->validate();
    if (init->dim != d || init->n_nodes() != total)
      throw std::invalid_argument("collocation: init grid mismatch");
    for (int i = 0; i < total; ++i)
      if (std::abs(init->times[i] - path.times[i]) > 1e-12 * std::max(1.0, p.bc.T))
        throw std::invalid_argument("collocation: init must use the uniform grid");
    path.states = init->states;
  }
  // Endpoints are fixed unknowns of the BVP regardless of init.
  for (int k = 0; k < d; ++k) {
    path.states[k] = p.bc.x0[k];
    path.states[(total - 1) * d + k] = p.bc.xT[k];
  }

  const int steps = p.continuation_steps > 0 ? p.continuation_steps : (p.bc.T >= 7.0 ? 5 : 1);
  CollocationResult out;
  out.newton_iters = 0;
  double res = 0.0;
  bool ok = true;
  for (int k = 1; k <= steps && ok; ++k) {
    DiscreteSystem sys{p.spec, p.bc, n, tau, static_cast<double>(k) / steps};
    ok = newton_solve(sys, path.states, p.tol, p.max_newton_iters, out.newton_iters, res);
  }
  out.path = std::move(path);
  out.converged = ok;
  out.residual_max = res;
  return out;
}

}  // namespace mptp
