#include "mptp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace mptp {

size_t MlpParams::n_data() const {
  size_t n = 0;
  for (int l = 1; l < static_cast<int>(layer_dims.size()); ++l)
    n += static_cast<size_t>(layer_dims[l]) * (layer_dims[l - 1] + 1);
  return n;
}

size_t MlpParams::weight_offset(int layer) const {
  size_t off = 0;
  for (int l = 1; l < layer; ++l) off += static_cast<size_t>(layer_dims[l]) * (layer_dims[l - 1] + 1);
  return off;
}

size_t MlpParams::bias_offset(int layer) const {
  return weight_offset(layer) + static_cast<size_t>(layer_dims[layer]) * layer_dims[layer - 1];
}

void MlpParams::validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("network needs at least one weight layer");
  for (int n : layer_dims)
    if (n < 1) throw std::invalid_argument("layer widths must be positive");
  if (data.size() != n_data()) throw std::invalid_argument("parameter storage size mismatch");
  for (double v : data)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite network parameter");
}

MlpParams mlp_init(const std::vector<int>& layer_dims, uint64_t seed) {
  if (layer_dims.size() < 3) throw std::invalid_argument("need at least two weight layers");
  for (int n : layer_dims)
    if (n < 1) throw std::invalid_argument("layer widths must be positive");

  MlpParams p;
  p.layer_dims = layer_dims;
  p.data.assign(p.n_data(), 0.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const int L = p.n_layers();
  for (int l = 1; l <= L; ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer_dims[l - 1]));
    double* w = p.data.data() + p.weight_offset(l);
    const size_t nw = static_cast<size_t>(layer_dims[l]) * layer_dims[l - 1];
    for (size_t i = 0; i < nw; ++i) {
      double z = unit(rng);
      while (std::abs(z) > 2.0) z = unit(rng);
      w[i] = z * scale;
    }
    // biases stay zero
  }
  return p;
}

JetEval::JetEval(const std::vector<int>& layer_dims) : dims_(layer_dims) {
  if (dims_.size() < 2) throw std::invalid_argument("network needs at least one weight layer");
  if (dims_.front() != 1) throw std::invalid_argument("jet evaluation needs scalar input");
  const int L = static_cast<int>(dims_.size()) - 1;
  off_.assign(L, 0);
  size_t total = 0;
  int maxw = dims_.back();
  for (int l = 1; l < L; ++l) {
    off_[l] = total;
    total += static_cast<size_t>(dims_[l]);
    maxw = std::max(maxw, dims_[l]);
  }
  maxw = std::max(maxw, 1);
  pre1_.resize(total);
  pre2_.resize(total);
  act_v_.resize(total);
  act_1_.resize(total);
  act_2_.resize(total);
  tanh_p_.resize(total);
  adj_a_.resize(3 * static_cast<size_t>(maxw));
  adj_b_.resize(3 * static_cast<size_t>(maxw));
  out_buf_.resize(3 * static_cast<size_t>(dims_.back()) + 3 * static_cast<size_t>(maxw));
}

void JetEval::forward(const MlpParams& params, double t) {
  if (params.layer_dims != dims_) throw std::invalid_argument("workspace bound to different layer dims");
  const int L = static_cast<int>(dims_.size()) - 1;
  input_ = t;

  // Scratch for the current layer's pre-activation jets.
  const int nout = dims_.back();
  double* curv = out_buf_.data() + 3 * static_cast<size_t>(nout);
  const size_t maxw = (out_buf_.size() - 3 * static_cast<size_t>(nout)) / 3;
  double* cur1 = curv + maxw;
  double* cur2 = cur1 + maxw;

  double in_v = t, in_1 = 1.0, in_2 = 0.0;
  const double* sv = &in_v;
  const double* s1 = &in_1;
  const double* s2 = &in_2;
  int nprev = 1;

  const double* base = params.data.data();
  size_t off = 0;
  for (int l = 1; l <= L; ++l) {
    const int n = dims_[l];
    const double* W = base + off;
    const double* b = W + static_cast<size_t>(n) * nprev;
    off += static_cast<size_t>(n) * (nprev + 1);

    double* dv = (l == L) ? out_buf_.data() : curv;
    double* d1 = (l == L) ? out_buf_.data() + nout : cur1;
    double* d2 = (l == L) ? out_buf_.data() + 2 * nout : cur2;
    for (int k = 0; k < n; ++k) {
      const double* row = W + static_cast<size_t>(k) * nprev;
      double av = b[k], a1 = 0.0, a2 = 0.0;
      for (int j = 0; j < nprev; ++j) {
        av += row[j] * sv[j];
        a1 += row[j] * s1[j];
        a2 += row[j] * s2[j];
      }
      dv[k] = av;
      d1[k] = a1;
      d2[k] = a2;
    }
    if (l < L) {
      const size_t o = off_[l];
      for (int k = 0; k < n; ++k) {
        const double u1 = cur1[k], u2 = cur2[k];
        const double tv = std::tanh(curv[k]);
        const double p = 1.0 - tv * tv;
        pre1_[o + k] = u1;
        pre2_[o + k] = u2;
        act_v_[o + k] = tv;
        tanh_p_[o + k] = p;
        act_1_[o + k] = p * u1;
        act_2_[o + k] = p * u2 - 2.0 * tv * p * u1 * u1;
      }
      sv = act_v_.data() + o;
      s1 = act_1_.data() + o;
      s2 = act_2_.data() + o;
      nprev = n;
    }
  }
  out_v_ = out_buf_.data();
  out_1_ = out_buf_.data() + nout;
  out_2_ = out_buf_.data() + 2 * nout;
}

void JetEval::backward(const MlpParams& params, const double* adj_value, const double* adj_d1,
                       const double* adj_d2, double* grad) {
  const int L = static_cast<int>(dims_.size()) - 1;
  const size_t maxw = adj_a_.size() / 3;
  double* cav = adj_a_.data();
  double* ca1 = cav + maxw;
  double* ca2 = ca1 + maxw;
  double* nav = adj_b_.data();
  double* na1 = nav + maxw;
  double* na2 = na1 + maxw;

  const int nout = dims_.back();
  for (int k = 0; k < nout; ++k) {
    cav[k] = adj_value ? adj_value[k] : 0.0;
    ca1[k] = adj_d1 ? adj_d1[k] : 0.0;
    ca2[k] = adj_d2 ? adj_d2[k] : 0.0;
  }

  const double in_jet[3] = {input_, 1.0, 0.0};
  const double* base = params.data.data();
  for (int l = L; l >= 1; --l) {
    const int n = dims_[l];
    const int nprev = dims_[l - 1];
    const size_t woff = params.weight_offset(l);
    const double* W = base + woff;
    double* gW = grad + woff;
    double* gb = gW + static_cast<size_t>(n) * nprev;

    const double* sv;
    const double* s1;
    const double* s2;
    if (l == 1) {
      sv = &in_jet[0];
      s1 = &in_jet[1];
      s2 = &in_jet[2];
    } else {
      const size_t o = off_[l - 1];
      sv = act_v_.data() + o;
      s1 = act_1_.data() + o;
      s2 = act_2_.data() + o;
    }

    for (int k = 0; k < n; ++k) {
      const double av = cav[k], a1 = ca1[k], a2 = ca2[k];
      gb[k] += av;
      double* row = gW + static_cast<size_t>(k) * nprev;
      for (int j = 0; j < nprev; ++j) row[j] += av * sv[j] + a1 * s1[j] + a2 * s2[j];
    }
    if (l == 1) break;

    const size_t o = off_[l - 1];
    for (int j = 0; j < nprev; ++j) {
      double asv = 0.0, as1 = 0.0, as2 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double w = W[static_cast<size_t>(k) * nprev + j];
        asv += w * cav[k];
        as1 += w * ca1[k];
        as2 += w * ca2[k];
      }
      const double tv = act_v_[o + j];
      const double p = tanh_p_[o + j];
      const double u1 = pre1_[o + j];
      const double u2 = pre2_[o + j];
      nav[j] = asv * p - 2.0 * tv * p * (as1 * u1 + as2 * u2) -
               2.0 * p * u1 * u1 * (p - 2.0 * tv * tv) * as2;
      na1[j] = as1 * p - 4.0 * tv * p * u1 * as2;
      na2[j] = as2 * p;
    }
    std::swap(cav, nav);
    std::swap(ca1, na1);
    std::swap(ca2, na2);
  }
}

Jet2 mlp_jet2(const MlpParams& params, double t) {
  JetEval ws(params.layer_dims);
  ws.forward(params, t);
  const int n = params.n_out();
  Jet2 out;
  out.value.assign(ws.value(), ws.value() + n);
  out.d1.assign(ws.d1(), ws.d1() + n);
  out.d2.assign(ws.d2(), ws.d2() + n);
  return out;
}

std::vector<double> mlp_eval(const MlpParams& params, double t) {
  const int L = params.n_layers();
  const auto& dims = params.layer_dims;
  if (dims.front() != 1) throw std::invalid_argument("scalar input expected");
  std::vector<double> cur{t}, next;
  const double* base = params.data.data();
  size_t off = 0;
  for (int l = 1; l <= L; ++l) {
    const int n = dims[l];
    const int nprev = dims[l - 1];
    const double* W = base + off;
    const double* b = W + static_cast<size_t>(n) * nprev;
    off += static_cast<size_t>(n) * (nprev + 1);
    next.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      const double* row = W + static_cast<size_t>(k) * nprev;
      double acc = b[k];
      for (int j = 0; j < nprev; ++j) acc += row[j] * cur[j];
      next[k] = (l < L) ? std::tanh(acc) : acc;
    }
    cur.swap(next);
  }
  return cur;
}

LossGrad loss_grad(const DifferentiableLoss& loss, const MlpParams& net,
                   const std::vector<double>& aux) {
  LossGrad out;
  out.value = loss.eval_grad(net, aux, out.grad_params, out.grad_aux);
  out.finite = std::isfinite(out.value);
  for (double g : out.grad_params)
    if (!std::isfinite(g)) out.finite = false;
  for (double g : out.grad_aux)
    if (!std::isfinite(g)) out.finite = false;
  return out;
}

LossGrad numeric_loss_grad(const DifferentiableLoss& loss, const MlpParams& net,
                           const std::vector<double>& aux, double step) {
  LossGrad out;
  out.value = loss.eval(net, aux);
  out.grad_params.assign(net.data.size(), 0.0);
  out.grad_aux.assign(aux.size(), 0.0);
  MlpParams work = net;
  for (size_t i = 0; i < net.data.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(net.data[i]));
    const double save = work.data[i];
    work.data[i] = save + h;
    const double fp = loss.eval(work, aux);
    work.data[i] = save - h;
    const double fm = loss.eval(work, aux);
    work.data[i] = save;
    out.grad_params[i] = (fp - fm) / (2.0 * h);
  }
  std::vector<double> waux = aux;
  for (size_t i = 0; i < aux.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(aux[i]));
    const double save = waux[i];
    waux[i] = save + h;
    const double fp = loss.eval(net, waux);
    waux[i] = save - h;
    const double fm = loss.eval(net, waux);
    waux[i] = save;
    out.grad_aux[i] = (fp - fm) / (2.0 * h);
  }
  return out;
}

void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam shape mismatch");
  state.k += 1;
  state.beta1_pow *= state.beta1;
  state.beta2_pow *= state.beta2;
  const double c1 = 1.0 / (1.0 - state.beta1_pow);
  const double c2 = 1.0 / (1.0 - state.beta2_pow);
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] * c1;
    const double vhat = state.v[i] * c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

void save_checkpoint(const MlpParams& params, const std::string& file) {
  params.validate();
  nlohmann::json j;
  j["layer_dims"] = params.layer_dims;
  nlohmann::json layers = nlohmann::json::array();
  for (int l = 1; l <= params.n_layers(); ++l) {
    const size_t wo = params.weight_offset(l);
    const size_t bo = params.bias_offset(l);
    const size_t nw = bo - wo;
    const size_t nb = static_cast<size_t>(params.layer_dims[l]);
    nlohmann::json layer;
    layer["weights"] = std::vector<double>(params.data.begin() + wo, params.data.begin() + wo + nw);
    layer["biases"] = std::vector<double>(params.data.begin() + bo, params.data.begin() + bo + nb);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + file);
  out << j.dump(2) << "\n";
}

MlpParams load_checkpoint(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + file);
  nlohmann::json j;
  in >> j;
  MlpParams p;
  p.layer_dims = j.at("layer_dims").get<std::vector<int>>();
  if (p.layer_dims.size() < 2) throw std::runtime_error("checkpoint has no layers");
  p.data.assign(p.n_data(), 0.0);
  const auto& layers = j.at("layers");
  if (layers.size() != static_cast<size_t>(p.n_layers()))
    throw std::runtime_error("checkpoint layer count mismatch");
  for (int l = 1; l <= p.n_layers(); ++l) {
    const auto w = layers[l - 1].at("weights").get<std::vector<double>>();
    const auto b = layers[l - 1].at("biases").get<std::vector<double>>();
    const size_t wo = p.weight_offset(l);
    const size_t bo = p.bias_offset(l);
    if (w.size() != bo - wo || b.size() != static_cast<size_t>(p.layer_dims[l]))
      throw std::runtime_error("checkpoint layer size mismatch");
    std::copy(w.begin(), w.end(), p.data.begin() + wo);
    std::copy(b.begin(), b.end(), p.data.begin() + bo);
  }
  p.validate();
  return p;
}

}  // namespace mptp
