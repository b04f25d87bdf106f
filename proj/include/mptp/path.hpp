#pragma once

#include <vector>

namespace mptp {

// Discrete path: times t_0 < t_1 < ... < t_N with one d-dimensional state per
// node, stored row-major in `states` (node index major).
struct PathSample {
  std::vector<double> times;
  std::vector<double> states;
  int dim = 1;

  int n_nodes() const { return static_cast<int>(times.size()); }
  const double* state(int i) const { return states.data() + static_cast<size_t>(i) * dim; }
  double* state(int i) { return states.data() + static_cast<size_t>(i) * dim; }

  void validate() const;

  static PathSample straight_line(const std::vector<double>& x0, const std::vector<double>& xT,
                                  double T, int n_nodes);
};

// First time derivative at every node from the quadratic through each node and
// its neighbours (2nd-order central stencil on uniform grids, one-sided at the
// ends). Returns an n_nodes x dim row-major matrix.
std::vector<double> path_derivative(const PathSample& path);

// Second time derivative, same stencil family.
std::vector<double> path_second_derivative(const PathSample& path);

// Linear interpolation of the path state at time t (clamped to the grid span).
std::vector<double> path_interpolate(const PathSample& path, double t);

// Resamples `path` onto `times` by linear interpolation.
PathSample path_resample(const PathSample& path, const std::vector<double>& times);

}  // namespace mptp
