#pragma once

#include "mptp/action.hpp"
#include "mptp/drift.hpp"
#include "mptp/path.hpp"

namespace mptp {

// Two-point boundary value problem for the Euler-Lagrange equation
// zddot = rhs(z, zdot) on n interior nodes of a uniform grid over [0, T].
// The discrete system uses the same second-order stencils as the rest of
// the project: central second difference for zddot, central first
// difference for zdot.
struct CollocationProblem {
  ElResidualSpec spec;
  BoundaryConditions bc;
  int n = 999;           // interior node count; grid has n+2 nodes
  // Max-norm residual target. The achievable floor in double precision is
  // about eps.|z|/tau^2 (the second difference amplifies state roundoff),
  // so fine grids or short horizons need a larger tol.
  double tol = 1e-10;
  int max_newton_iters = 50;
  // Homotopy steps scaling the rhs from 0 (straight-line problem) to 1.
  // 0 selects the default: 5 steps when T >= 7, otherwise a direct solve.
  int continuation_steps = 0;
};

struct CollocationResult {
  PathSample path;      // best iterate; the solution when converged
  bool converged = false;
  double residual_max = 0.0;  // max-norm discrete residual at `path`
  int newton_iters = 0;       // total Newton steps across continuation
};

// Damped Newton (step halving, max 30) on the block-tridiagonal discrete
// system; endpoints pinned to bc. `init`, when given, must sit on the
// problem's uniform grid and replaces the straight-line initial guess.
// Never throws for numerical failure: stagnation returns converged=false
// with the best iterate.
CollocationResult solve_el_collocation(const CollocationProblem& p,
                                       const PathSample* init = nullptr);

}  // namespace mptp
