#include "mptp/path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mptp {

void PathSample::validate() const {
  if (dim < 1) throw std::invalid_argument("path dimension must be positive");
  if (times.size() < 2) throw std::invalid_argument("path needs at least two nodes");
  if (states.size() != times.size() * static_cast<size_t>(dim))
    throw std::invalid_argument("state row count must equal times length");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("times must be strictly increasing");
  for (double v : states)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite path state");
}

PathSample PathSample::straight_line(const std::vector<double>& x0, const std::vector<double>& xT,
                                     double T, int n_nodes) {
  if (n_nodes < 2) throw std::invalid_argument("need at least two nodes");
  if (x0.size() != xT.size() || x0.empty()) throw std::invalid_argument("endpoint dimension mismatch");
  PathSample p;
  p.dim = static_cast<int>(x0.size());
  p.times.resize(n_nodes);
  p.states.resize(static_cast<size_t>(n_nodes) * p.dim);
  for (int i = 0; i < n_nodes; ++i) {
    const double s = static_cast<double>(i) / (n_nodes - 1);
    p.times[i] = s * T;
    for (int k = 0; k < p.dim; ++k) p.states[static_cast<size_t>(i) * p.dim + k] = (1.0 - s) * x0[k] + s * xT[k];
  }
  p.times.back() = T;
  return p;
}

namespace {

// Derivative weights of the quadratic through (ta, tb, tc) evaluated at te.
void quad_d1_weights(double ta, double tb, double tc, double te, double w[3]) {
  w[0] = (2.0 * te - tb - tc) / ((ta - tb) * (ta - tc));
  w[1] = (2.0 * te - ta - tc) / ((tb - ta) * (tb - tc));
  w[2] = (2.0 * te - ta - tb) / ((tc - ta) * (tc - tb));
}

void quad_d2_weights(double ta, double tb, double tc, double w[3]) {
  w[0] = 2.0 / ((ta - tb) * (ta - tc));
  w[1] = 2.0 / ((tb - ta) * (tb - tc));
  w[2] = 2.0 / ((tc - ta) * (tc - tb));
}

std::vector<double> stencil_apply(const PathSample& path, bool second) {
  path.validate();
  const int n = path.n_nodes();
  const int d = path.dim;
  if (n < 3) throw std::invalid_argument("derivative stencils need at least three nodes");
  std::vector<double> out(static_cast<size_t>(n) * d);
  double w[3];
  for (int i = 0; i < n; ++i) {
    const int c = std::clamp(i, 1, n - 2);  // centre of the three-point stencil
    const double ta = path.times[c - 1], tb = path.times[c], tc = path.times[c + 1];
    if (second)
      quad_d2_weights(ta, tb, tc, w);
    else
      quad_d1_weights(ta, tb, tc, path.times[i], w);
    const double* za = path.state(c - 1);
    const double* zb = path.state(c);
    const double* zc = path.state(c + 1);
    for (int k = 0; k < d; ++k)
      out[static_cast<size_t>(i) * d + k] = w[0] * za[k] + w[1] * zb[k] + w[2] * zc[k];
  }
  return out;
}

}  // namespace

std::vector<double> path_derivative(const PathSample& path) { return stencil_apply(path, false); }

std::vector<double> path_second_derivative(const PathSample& path) { return stencil_apply(path, true); }

std::vector<double> path_interpolate(const PathSample& path, double t) {
  const int n = path.n_nodes();
  const int d = path.dim;
  if (t <= path.times.front()) return std::vector<double>(path.state(0), path.state(0) + d);
  if (t >= path.times.back()) return std::vector<double>(path.state(n - 1), path.state(n - 1) + d);
  const auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
  const int j = static_cast<int>(it - path.times.begin());
  const double t0 = path.times[j - 1], t1 = path.times[j];
  const double s = (t - t0) / (t1 - t0);
  std::vector<double> out(d);
  const double* a = path.state(j - 1);
  const double* b = path.state(j);
  for (int k = 0; k < d; ++k) out[k] = (1.0 - s) * a[k] + s * b[k];
  return out;
}

PathSample path_resample(const PathSample& path, const std::vector<double>& times) {
  PathSample out;
  out.dim = path.dim;
  out.times = times;
  out.states.resize(times.size() * static_cast<size_t>(path.dim));
  for (size_t i = 0; i < times.size(); ++i) {
    const auto z = path_interpolate(path, times[i]);
    std::copy(z.begin(), z.end(), out.states.begin() + static_cast<long>(i) * path.dim);
  }
  return out;
}

}  // namespace mptp
