#pragma once

#include <vector>

#include "mptp/drift.hpp"
#include "mptp/path.hpp"

namespace mptp {

// Euler-Lagrange right-hand sides for the two transition-path action
// functionals. A path extremizes the action iff zddot == rhs pointwise.
//
// fw (identity diffusion):
//   rhs_k = sum_j zdot_j (J[k][j] - J[j][k]) + sum_j f_j J[j][k]
// om (diagonal amplitudes a_k, c_kj = a_k^2/a_j^2):
//   rhs_k = sum_j zdot_j (J[k][j] - c_kj J[j][k])
//         + sum_j c_kj f_j J[j][k] + (a_k^2/2) grad_div_k
// with J[k][j] = d f^k / d x_j.
struct ElResidualSpec {
  DriftModel model;
  NoiseSpec noise;

  ElResidualSpec(DriftModel m, NoiseSpec n);
  int dim() const { return model.dim; }
};

// Scratch buffers reused across evaluations; sized on first use.
struct ElWorkspace {
  std::vector<double> f, jac, grad_div, hess, hess_div, dfb, djb, dgdb;
};

// rhs: d values.
void el_rhs(const ElResidualSpec& spec, const double* z, const double* zdot, double* rhs,
            ElWorkspace& ws);

// Additionally fills drhs_dz[k*d+l] = d rhs_k / d z_l and
// drhs_dzdot[k*d+j] = d rhs_k / d zdot_j. Either output may be null.
void el_rhs_derivs(const ElResidualSpec& spec, const double* z, const double* zdot, double* rhs,
                   double* drhs_dz, double* drhs_dzdot, ElWorkspace& ws);

// drhs_dbeta[p*d+k] = d rhs_k / d beta_p (p = model.n_params() rows).
void el_rhs_param_grad(const ElResidualSpec& spec, const double* z, const double* zdot,
                       double* drhs_dbeta, ElWorkspace& ws);

// residual_k = zddot_k - rhs_k. Throws std::invalid_argument on size mismatch.
std::vector<double> el_residual(const ElResidualSpec& spec, const std::vector<double>& z,
                                const std::vector<double>& zdot, const std::vector<double>& zddot);

// (1/2) integral of |zdot - f|^2 dt, identity diffusion. Derivatives by the
// shared quadratic stencils, quadrature by the trapezoidal rule. >= 3 nodes.
double fw_action(const PathSample& path, const DriftModel& model);

// (1/2) integral of sum_k (zdot_k - f_k)^2 / a_k^2 + div f dt (the 1/2 also
// multiplies the divergence term). Diagonal amplitudes only.
double om_action(const PathSample& path, const DriftModel& model, const NoiseSpec& noise);

// First integral of the fw extremal flow: E = |zdot|^2/2 - |f(z)|^2/2.
// Constant along accurate solutions of the fw Euler-Lagrange equation.
double fw_energy(const DriftModel& model, const std::vector<double>& z,
                 const std::vector<double>& zdot);

// E at every node of the path, derivatives by the shared stencils.
std::vector<double> fw_energy_profile(const DriftModel& model, const PathSample& path);

}  // namespace mptp
