#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mptp {

enum class DriftKind { zero, linear_decay, double_well, gene_regulation, maier_stein };

enum class Framework { om, fw };

// Drift field f: R^d -> R^d with analytic derivatives up to the orders the
// Euler-Lagrange residuals, their adjoints, and the collocation Jacobian need.
//
// Parameter layouts (beta):
//   zero            []                any dimension, f = 0
//   linear_decay    [a]               1D, f = -a x
//   double_well     [l1, l2]          1D, f = l1 x + l2 x^3
//   gene_regulation [kf, Kd, kd, Rb]  1D, f = kf x^2/(x^2+Kd) - kd x + Rb, Kd > 0
//   maier_stein     [l1, l2, l3, l4]  2D, f = (l1 x + l2 x^3 + l3 x y^2,
//                                            l3 x^2 y + l4 y)
//
// maier_stein is the negative gradient of the quartic potential
// -(l1/2) x^2 - (l2/4) x^4 - (l3/2) x^2 y^2 - (l4/2) y^2, so its Jacobian is
// symmetric for every parameter value.
//
// Buffer layouts (row-major):
//   jac[k*d + j]              = d f^k / d x_j
//   hess[(k*d + j)*d + l]     = d^2 f^k / (d x_j d x_l)
//   grad_div[k]               = d (div f) / d x_k
//   hess_div[k*d + l]         = d^2 (div f) / (d x_k d x_l)
//   df_dbeta[p*d + k]         = d f^k / d beta_p
//   djac_dbeta[p*d*d + k*d+j] = d jac[k,j] / d beta_p
//   dgrad_div_dbeta[p*d + k]  = d grad_div[k] / d beta_p
struct DriftModel {
  DriftKind kind = DriftKind::zero;
  int dim = 1;
  std::vector<double> beta;

  static DriftModel zero(int dim);
  static DriftModel linear_decay(double a);
  static DriftModel double_well(double l1, double l2);
  static DriftModel gene_regulation(double kf, double Kd, double kd, double Rb);
  static DriftModel maier_stein(double l1, double l2, double l3, double l4);

  // Same kind and dimension, different parameter vector.
  DriftModel with_beta(const std::vector<double>& b) const;

  int n_params() const { return static_cast<int>(beta.size()); }
  std::string kind_name() const;

  void f(const double* x, double* out) const;
  void jac(const double* x, double* out) const;
  void hess(const double* x, double* out) const;
  double div(const double* x) const;
  void grad_div(const double* x, double* out) const;
  void hess_div(const double* x, double* out) const;

  void df_dbeta(const double* x, double* out) const;
  void djac_dbeta(const double* x, double* out) const;
  void dgrad_div_dbeta(const double* x, double* out) const;

  std::vector<double> f(const std::vector<double>& x) const;
  std::vector<double> jac(const std::vector<double>& x) const;
  std::vector<double> grad_div(const std::vector<double>& x) const;
};

struct NoiseSpec {
  Framework framework = Framework::fw;
  // Collapsed per-coordinate amplitudes a_k (epsilon times the k-th diagonal
  // sigma entry). The FW residual assumes identity diffusion and ignores them;
  // the OM residual requires one positive amplitude per coordinate.
  std::vector<double> amplitudes;

  static NoiseSpec fw();
  static NoiseSpec om(std::vector<double> amplitudes);
  static NoiseSpec om_uniform(double a, int dim);

  void validate(int dim) const;
};

struct BoundaryConditions {
  std::vector<double> x0;
  std::vector<double> xT;
  double T = 1.0;

  int dim() const { return static_cast<int>(x0.size()); }
  void validate() const;
};

struct Equilibrium {
  double x = 0.0;
  bool stable = false;
};

// Scans n_scan uniform subintervals of [lo, hi] for sign changes of f and
// refines each by bisection to |f| <= 1e-10. Roots closer than 1e-8 are
// merged. 1D models only.
std::vector<Equilibrium> find_equilibria(const DriftModel& model, double lo, double hi,
                                         int n_scan = 4096);

}  // namespace mptp
