#include "mptp/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "mptp/bridge.hpp"
#include "mptp/collocation.hpp"
#include "mptp/pinn.hpp"

namespace mptp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

bool log_enabled() {
  const char* v = std::getenv("MPTP_LOG");
  return v != nullptr && std::string(v) != "quiet";
}

void log_line(const std::string& msg) {
  if (log_enabled()) std::cerr << msg << "\n";
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- CSV ----

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_num(const std::string& tok, const std::string& file, int line_no) {
  try {
    size_t pos = 0;
    const double v = std::stod(tok, &pos);
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(file + ":" + std::to_string(line_no) + ": bad numeric value '" + tok + "'");
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open file: " + file);
  CsvTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ConfigError(file + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(t.header.size()) + " columns, got " +
                        std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) row[i] = parse_num(cells[i], file, line_no);
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ConfigError(file + ": empty file");
  return t;
}

// ---- JSON config ----

json load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config: " + file);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(file + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                      e.what());
  }
}

const json& require_field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(ctx + ": missing field '" + key + "'");
  return j.at(key);
}

double as_num(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw ConfigError(ctx + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(ctx + ": non-finite number");
  return v;
}

double num_field(const json& j, const char* key, const std::string& ctx) {
  return as_num(require_field(j, key, ctx), ctx + "." + key);
}

double num_or(const json& j, const char* key, double dflt, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return as_num(j.at(key), ctx + "." + key);
}

int int_or(const json& j, const char* key, int dflt, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  const json& f = j.at(key);
  if (!f.is_number_integer()) throw ConfigError(ctx + "." + key + ": expected an integer");
  return f.get<int>();
}

std::string str_field(const json& j, const char* key, const std::string& ctx) {
  const json& f = require_field(j, key, ctx);
  if (!f.is_string()) throw ConfigError(ctx + "." + key + ": expected a string");
  return f.get<std::string>();
}

std::vector<double> vec_field(const json& j, const char* key, const std::string& ctx) {
  const json& f = require_field(j, key, ctx);
  if (!f.is_array()) throw ConfigError(ctx + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < f.size(); ++i)
    out.push_back(as_num(f[i], ctx + "." + key + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> int_vec_or(const json& j, const char* key, std::vector<int> dflt,
                            const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  const json& f = j.at(key);
  if (!f.is_array()) throw ConfigError(ctx + "." + key + ": expected an array of integers");
  std::vector<int> out;
  for (size_t i = 0; i < f.size(); ++i) {
    if (!f[i].is_number_integer())
      throw ConfigError(ctx + "." + key + "[" + std::to_string(i) + "]: expected an integer");
    out.push_back(f[i].get<int>());
  }
  return out;
}

DriftModel parse_system(const json& cfg) {
  const json& s = require_field(cfg, "system", "config");
  const std::string kind = str_field(s, "kind", "system");
  if (kind == "zero") return DriftModel::zero(int_or(s, "dim", 1, "system"));
  const auto beta = vec_field(s, "beta", "system");
  auto expect = [&](size_t n, const char* name) {
    if (beta.size() != n)
      throw ConfigError("system.beta: " + std::string(name) + " takes " + std::to_string(n) +
                        " parameters, got " + std::to_string(beta.size()));
  };
  if (kind == "linear_decay") {
    expect(1, "linear_decay");
    return DriftModel::linear_decay(beta[0]);
  }
  if (kind == "double_well") {
    expect(2, "double_well");
    return DriftModel::double_well(beta[0], beta[1]);
  }
  if (kind == "gene_regulation") {
    expect(4, "gene_regulation");
    return DriftModel::gene_regulation(beta[0], beta[1], beta[2], beta[3]);
  }
  if (kind == "maier_stein") {
    expect(4, "maier_stein");
    return DriftModel::maier_stein(beta[0], beta[1], beta[2], beta[3]);
  }
  throw ConfigError("system.kind: unknown drift kind '" + kind + "'");
}

NoiseSpec parse_noise(const json& cfg) {
  if (!cfg.contains("noise")) return NoiseSpec::fw();
  const json& n = cfg.at("noise");
  const std::string fr = str_field(n, "framework", "noise");
  if (fr == "fw") return NoiseSpec::fw();
  if (fr == "om") return NoiseSpec::om(vec_field(n, "amplitudes", "noise"));
  throw ConfigError("noise.framework: expected 'fw' or 'om', got '" + fr + "'");
}

BoundaryConditions parse_bc(const json& cfg) {
  const json& b = require_field(cfg, "bc", "config");
  BoundaryConditions bc;
  bc.x0 = vec_field(b, "x0", "bc");
  bc.xT = vec_field(b, "xT", "bc");
  bc.T = num_field(b, "T", "bc");
  return bc;
}

// Paths inside the config resolve relative to the config file's directory.
std::string resolve(const std::string& file, const std::string& config_path) {
  fs::path p(file);
  if (p.is_absolute()) return file;
  return (fs::path(config_path).parent_path() / p).string();
}

// ---- result.json ----

json final_losses_json(const std::vector<std::pair<const char*, double>>& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

void write_result(const std::string& outdir, json result) {
  std::ofstream out(fs::path(outdir) / "result.json");
  if (!out) throw std::runtime_error("cannot write result.json in " + outdir);
  out << result.dump(2) << "\n";
}

struct Envelope {
  json result;
  std::chrono::steady_clock::time_point start;

  Envelope(const std::string& command, uint64_t seed, const json& echo) {
    result["command"] = command;
    result["seed"] = seed;
    result["code_version"] = kCodeVersion;
    result["config"] = echo;
    result["partial"] = false;
    result["beta"] = json::array();
    result["final_losses"] = json::object();
    start = std::chrono::steady_clock::now();
  }

  void finish(const std::string& outdir) {
    result["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_result(outdir, result);
  }
};

void write_history_csv(const std::string& outdir, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
  write_table_csv((fs::path(outdir) / "history.csv").string(), header, rows);
}

PathSample net_path(const MlpParams& net, double t0, double t1, int nodes) {
  PathSample p;
  p.dim = net.n_out();
  p.times.resize(nodes);
  p.states.resize(static_cast<size_t>(nodes) * p.dim);
  for (int i = 0; i < nodes; ++i) {
    p.times[i] = t0 + (t1 - t0) * static_cast<double>(i) / (nodes - 1);
    const auto v = mlp_eval(net, p.times[i]);
    for (int k = 0; k < p.dim; ++k) p.states[static_cast<size_t>(i) * p.dim + k] = v[k];
  }
  return p;
}

// ---- commands ----

int cmd_forward(const json& cfg, const std::string& outdir, uint64_t seed, Envelope& env) {
  ForwardConfig fc{parse_system(cfg), parse_noise(cfg), parse_bc(cfg)};
  const json s = cfg.value("solver", json::object());
  fc.m = int_or(s, "m", fc.m, "solver");
  fc.lambda_r = num_or(s, "lambda_r", fc.lambda_r, "solver");
  fc.lambda_b = num_or(s, "lambda_b", fc.lambda_b, "solver");
  fc.iterations = int_or(s, "iterations", fc.iterations, "solver");
  fc.lr = num_or(s, "lr", fc.lr, "solver");
  fc.hidden = int_vec_or(s, "hidden", fc.hidden, "solver");
  fc.reg.alpha = num_or(s, "holder_alpha", fc.reg.alpha, "solver");
  fc.reg.weight = num_or(s, "holder_weight", fc.reg.weight, "solver");
  fc.output_nodes = int_or(s, "output_nodes", fc.output_nodes, "solver");
  fc.history_stride = int_or(s, "history_stride", std::max(1, fc.iterations / 1000), "solver");
  fc.seed = seed;
  fc.validate();

  log_line("forward: training " + std::to_string(fc.iterations) + " iterations");
  const auto r = train_forward(fc);
  write_path_csv(r.path, (fs::path(outdir) / "path.csv").string());
  std::vector<std::vector<double>> rows;
  for (const auto& h : r.history)
    rows.push_back({static_cast<double>(h.iteration), h.total, h.residual, h.boundary,
                    h.regularizer});
  write_history_csv(outdir, {"iter", "total", "residual", "boundary", "regularizer"}, rows);
  env.result["history_file"] = "history.csv";
  if (!r.history.empty())
    env.result["final_losses"] =
        final_losses_json({{"total", r.history.back().total},
                           {"residual", r.history.back().residual},
                           {"boundary", r.history.back().boundary},
                           {"regularizer", r.history.back().regularizer}});
  env.result["partial"] = r.diverged;
  if (r.diverged) env.result["diverged_at"] = r.diverged_at;
  return r.diverged ? 3 : 0;
}

int cmd_oracle(const json& cfg, const std::string& outdir, Envelope& env) {
  const auto model = parse_system(cfg);
  const auto noise = parse_noise(cfg);
  CollocationProblem p{ElResidualSpec(model, noise), parse_bc(cfg)};
  const json s = cfg.value("solver", json::object());
  p.n = int_or(s, "n", p.n, "solver");
  // Discrete residuals bottom out near machine-eps/tau^2; the default keeps
  // fine grids from being misreported as failures.
  p.tol = num_or(s, "tol", 1e-8, "solver");
  p.max_newton_iters = int_or(s, "max_newton_iters", p.max_newton_iters, "solver");
  p.continuation_steps = int_or(s, "continuation_steps", p.continuation_steps, "solver");

  log_line("oracle: solving boundary value problem, n=" + std::to_string(p.n));
  const auto r = solve_el_collocation(p);
  write_path_csv(r.path, (fs::path(outdir) / "path.csv").string());
  env.result["converged"] = r.converged;
  env.result["newton_iters"] = r.newton_iters;
  const double action = noise.framework == Framework::om ? om_action(r.path, model, noise)
                                                         : fw_action(r.path, model);
  env.result["final_losses"] =
      final_losses_json({{"residual_max", r.residual_max}, {"action", action}});
  env.result["partial"] = !r.converged;
  return r.converged ? 0 : 3;
}

int cmd_bridge(const json& cfg, const std::string& outdir, uint64_t seed, Envelope& env) {
  const auto bc = parse_bc(cfg);
  BridgeConfig bcfg;
  bcfg.model = parse_system(cfg);
  bcfg.x0 = bc.x0;
  bcfg.xT = bc.xT;
  bcfg.T = bc.T;
  const json s = cfg.value("solver", json::object());
  bcfg.epsilon = num_or(s, "epsilon", bcfg.epsilon, "solver");
  bcfg.n_steps = int_or(s, "n_steps", bcfg.n_steps, "solver");
  bcfg.n_paths = int_or(s, "n_paths", bcfg.n_paths, "solver");
  bcfg.n_quad = int_or(s, "n_quad", bcfg.n_quad, "solver");
  bcfg.seed = seed;
  if (s.contains("variant")) {
    const std::string v = str_field(s, "variant", "solver");
    if (v == "fw_small_noise")
      bcfg.variant = BridgeVariant::fw_small_noise;
    else if (v == "om_short_time")
      bcfg.variant = BridgeVariant::om_short_time;
    else
      throw ConfigError("solver.variant: expected 'fw_small_noise' or 'om_short_time'");
  }
  bcfg.validate();

  log_line("bridge: sampling " + std::to_string(bcfg.n_paths) + " paths");
  const auto r = simulate_bridge(bcfg);
  env.result["n_aborted"] = r.n_aborted;
  env.result["n_paths"] = static_cast<int>(r.paths.size());
  if (r.paths.empty()) {
    env.result["partial"] = true;
    return 3;
  }
  fs::create_directories(fs::path(outdir) / "ensemble");
  for (size_t i = 0; i < r.paths.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "path_%03zu.csv", i);
    write_path_csv(r.paths[i], (fs::path(outdir) / "ensemble" / name).string());
  }
  write_path_csv(average_paths(r.paths), (fs::path(outdir) / "path.csv").string());
  env.result["partial"] = r.n_aborted > 0;
  return 0;
}

// Optional preprocessing shared by the inverse commands: subsample the
// observation series to `observe_n` uniform times and apply multiplicative
// noise of level `eta`, both driven by the run seed.
ObservationSet load_observations(const json& s, const std::string& config_path, uint64_t seed) {
  auto obs = read_observations_csv(resolve(str_field(s, "observations", "solver"), config_path));
  const int observe_n = int_or(s, "observe_n", 0, "solver");
  const double eta = num_or(s, "eta", 0.0, "solver");
  if (observe_n == 0 && eta == 0.0) return obs;
  PathSample p;
  p.dim = obs.dim;
  p.times = std::move(obs.times);
  p.states = std::move(obs.states);
  if (eta > 0.0) p = perturb_path(p, eta, seed + 2);
  ObservationSet out = observe_n > 0 ? observe_path(p, observe_n) : ObservationSet{};
  if (observe_n == 0) {
    out.dim = p.dim;
    out.times = std::move(p.times);
    out.states = std::move(p.states);
  }
  out.eta = eta;
  return out;
}

int cmd_inverse_param(const json& cfg, const std::string& config_path, const std::string& outdir,
                      uint64_t seed, Envelope& env) {
  const auto family = parse_system(cfg);
  const auto noise = parse_noise(cfg);
  const json s = cfg.value("solver", json::object());
  const auto obs = load_observations(s, config_path, seed);

  ParamInverseConfig pic;
  pic.beta0 = s.contains("beta0") ? vec_field(s, "beta0", "solver") : family.beta;
  pic.lambda_d = num_or(s, "lambda_d", pic.lambda_d, "solver");
  pic.m = int_or(s, "m", pic.m, "solver");
  pic.iterations = int_or(s, "iterations", pic.iterations, "solver");
  pic.lr = num_or(s, "lr", pic.lr, "solver");
  pic.hidden = int_vec_or(s, "hidden", pic.hidden, "solver");
  pic.history_stride = int_or(s, "history_stride", std::max(1, pic.iterations / 1000), "solver");
  pic.seed = seed;
  pic.validate(family);

  log_line("inverse-param: training " + std::to_string(pic.iterations) + " iterations");
  const auto r = train_parametric(family, noise, obs, pic);
  const int nodes = int_or(s, "output_nodes", 1001, "solver");
  if (nodes < 2) throw ConfigError("solver.output_nodes: need at least two nodes");
  write_path_csv(net_path(r.net, obs.times.front(), obs.times.back(), nodes),
                 (fs::path(outdir) / "path.csv").string());

  std::vector<std::string> header = {"iter", "total", "residual", "data"};
  for (size_t p = 0; p < r.beta.size(); ++p) header.push_back("beta" + std::to_string(p + 1));
  std::vector<std::vector<double>> rows;
  for (const auto& h : r.history) {
    std::vector<double> row = {static_cast<double>(h.iteration), h.total, h.residual, h.data};
    row.insert(row.end(), h.beta.begin(), h.beta.end());
    rows.push_back(std::move(row));
  }
  write_history_csv(outdir, header, rows);

  env.result["beta"] = r.beta;
  env.result["history_file"] = "history.csv";
  if (!r.history.empty())
    env.result["final_losses"] = final_losses_json({{"total", r.history.back().total},
                                                    {"residual", r.history.back().residual},
                                                    {"data", r.history.back().data}});
  env.result["partial"] = r.diverged;
  if (r.diverged) env.result["diverged_at"] = r.diverged_at;
  return r.diverged ? 3 : 0;
}

int cmd_inverse_nonparam(const json& cfg, const std::string& config_path,
                         const std::string& outdir, uint64_t seed, Envelope& env) {
  const auto noise = parse_noise(cfg);
  const json s = cfg.value("solver", json::object());
  auto obs = load_observations(s, config_path, seed);
  if (s.contains("anchors"))
    read_anchors_csv(resolve(str_field(s, "anchors", "solver"), config_path), obs.dim,
                     obs.anchor_x, obs.anchor_f);

  NonParamConfig nc;
  nc.layer_dims = int_vec_or(s, "layer_dims", nc.layer_dims, "solver");
  nc.gamma1 = num_or(s, "gamma1", nc.gamma1, "solver");
  nc.gamma2 = num_or(s, "gamma2", nc.gamma2, "solver");
  nc.iterations = int_or(s, "iterations", nc.iterations, "solver");
  nc.lr = num_or(s, "lr", nc.lr, "solver");
  nc.history_stride = int_or(s, "history_stride", std::max(1, nc.iterations / 1000), "solver");
  nc.seed = seed;
  nc.validate();

  log_line("inverse-nonparam: training " + std::to_string(nc.iterations) + " iterations");
  const auto r = train_nonparametric(obs, noise, nc);

  // Learned drift sampled over the observed state range (or a given window).
  double lo = obs.states[0], hi = obs.states[0];
  for (double v : obs.states) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  lo = num_or(s, "eval_lo", lo, "solver");
  hi = num_or(s, "eval_hi", hi, "solver");
  const int nodes = int_or(s, "eval_nodes", 401, "solver");
  if (!(hi > lo) || nodes < 2) throw ConfigError("solver.eval_lo/eval_hi/eval_nodes: bad window");
  std::vector<std::vector<double>> drift_rows;
  for (int i = 0; i < nodes; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (nodes - 1);
    drift_rows.push_back({x, mlp_eval(r.net, x)[0]});
  }
  write_table_csv((fs::path(outdir) / "drift.csv").string(), {"x", "f1"}, drift_rows);

  std::vector<std::vector<double>> rows;
  for (const auto& h : r.history)
    rows.push_back({static_cast<double>(h.iteration), h.total, h.ode, h.drift, h.reg});
  write_history_csv(outdir, {"iter", "total", "ode", "drift", "reg"}, rows);

  env.result["history_file"] = "history.csv";
  env.result["drift_file"] = "drift.csv";
  if (!r.history.empty())
    env.result["final_losses"] = final_losses_json({{"total", r.history.back().total},
                                                    {"ode", r.history.back().ode},
                                                    {"drift", r.history.back().drift},
                                                    {"reg", r.history.back().reg}});
  env.result["partial"] = r.diverged;
  if (r.diverged) env.result["diverged_at"] = r.diverged_at;
  return r.diverged ? 3 : 0;
}

int cmd_report(const json& cfg, const std::string& config_path, const std::string& outdir,
               Envelope& env) {
  const json s = cfg.value("solver", json::object());
  const json& dirs_json = require_field(s, "run_dirs", "solver");
  if (!dirs_json.is_array() || dirs_json.empty())
    throw ConfigError("solver.run_dirs: expected a non-empty array of run directories");
  std::vector<std::string> dirs;
  for (const auto& d : dirs_json) {
    if (!d.is_string()) throw ConfigError("solver.run_dirs: expected strings");
    dirs.push_back(resolve(d.get<std::string>(), config_path));
  }

  std::vector<PathSample> paths;
  std::vector<std::vector<double>> betas;
  for (const auto& d : dirs) {
    paths.push_back(read_path_csv((fs::path(d) / "path.csv").string()));
    std::vector<double> beta;
    std::ifstream in(fs::path(d) / "result.json");
    if (in) {
      try {
        const json r = json::parse(in);
        if (r.contains("beta") && r["beta"].is_array())
          for (const auto& b : r["beta"]) beta.push_back(b.get<double>());
      } catch (const json::exception&) {
        // a run dir without a readable manifest still contributes its path
      }
    }
    betas.push_back(std::move(beta));
  }

  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < paths.size(); ++i) {
    for (size_t j = i + 1; j < paths.size(); ++j) {
      if (paths[i].dim != paths[j].dim)
        throw ConfigError("report: path dimensions differ between '" + dirs[i] + "' and '" +
                          dirs[j] + "'");
      const auto b = path_resample(paths[j], paths[i].times);
      double linf = 0.0, ms = 0.0;
      for (size_t k = 0; k < paths[i].states.size(); ++k) {
        const double diff = std::abs(paths[i].states[k] - b.states[k]);
        linf = std::max(linf, diff);
        ms += diff * diff / paths[i].states.size();
      }
      double beta_err = std::numeric_limits<double>::quiet_NaN();
      if (!betas[i].empty() && betas[i].size() == betas[j].size()) {
        beta_err = 0.0;
        for (size_t p = 0; p < betas[i].size(); ++p)
          beta_err = std::max(beta_err, std::abs(betas[i][p] - betas[j][p]) /
                                            std::max(1.0, std::abs(betas[i][p])));
      }
      rows.push_back({static_cast<double>(i), static_cast<double>(j), linf, std::sqrt(ms),
                      beta_err});
    }
  }
  write_table_csv((fs::path(outdir) / "report.csv").string(),
                  {"run_a", "run_b", "linf", "rmse", "beta_max_rel_err"}, rows);
  json jdirs = json::array();
  for (const auto& d : dirs) jdirs.push_back(d);
  env.result["run_dirs"] = jdirs;
  env.result["report_file"] = "report.csv";
  return 0;
}

}  // namespace

// ---- public CSV API ----

void write_path_csv(const PathSample& path, const std::string& file) {
  path.validate();
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write file: " + file);
  out << "t";
  for (int k = 1; k <= path.dim; ++k) out << ",z" << k;
  out << "\n";
  for (int i = 0; i < path.n_nodes(); ++i) {
    out << fmt17(path.times[i]);
    const double* z = path.state(i);
    for (int k = 0; k < path.dim; ++k) out << "," << fmt17(z[k]);
    out << "\n";
  }
}

PathSample read_path_csv(const std::string& file) {
  const auto t = read_csv(file);
  if (t.header.size() < 2)
    throw ConfigError(file + ": path files need a time column and at least one state column");
  PathSample p;
  p.dim = static_cast<int>(t.header.size()) - 1;
  for (const auto& row : t.rows) {
    p.times.push_back(row[0]);
    for (int k = 0; k < p.dim; ++k) p.states.push_back(row[k + 1]);
  }
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw ConfigError(file + ": " + e.what());
  }
  return p;
}

void write_table_csv(const std::string& file, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write file: " + file);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("table row width does not match the header");
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt17(row[i]);
    out << "\n";
  }
}

ObservationSet read_observations_csv(const std::string& file) {
  PathSample p = read_path_csv(file);
  ObservationSet obs;
  obs.dim = p.dim;
  obs.times = std::move(p.times);
  obs.states = std::move(p.states);
  try {
    obs.validate();
  } catch (const std::exception& e) {
    throw ConfigError(file + ": " + e.what());
  }
  return obs;
}

void read_anchors_csv(const std::string& file, int dim, std::vector<double>& anchor_x,
                      std::vector<double>& anchor_f) {
  const auto t = read_csv(file);
  if (static_cast<int>(t.header.size()) != 2 * dim)
    throw ConfigError(file + ": expected " + std::to_string(2 * dim) +
                      " columns (anchor states then drift values)");
  anchor_x.clear();
  anchor_f.clear();
  for (const auto& row : t.rows) {
    for (int k = 0; k < dim; ++k) anchor_x.push_back(row[k]);
    for (int k = 0; k < dim; ++k) anchor_f.push_back(row[dim + k]);
  }
  if (anchor_x.empty()) throw ConfigError(file + ": no anchor rows");
}

// ---- driver ----

int run_experiment(const std::string& command, const std::string& config_path,
                   const std::string& out_override, const uint64_t* seed_override) {
  json cfg;
  std::string outdir;
  uint64_t seed = 0;
  try {
    cfg = load_config(config_path);
    if (!cfg.is_object()) throw ConfigError(config_path + ": config must be a JSON object");
    if (cfg.contains("command")) {
      const std::string c = str_field(cfg, "command", "config");
      if (c != command)
        throw ConfigError("config names command '" + c + "' but '" + command + "' was invoked");
    }
    if (cfg.contains("seed")) {
      const json& sj = cfg.at("seed");
      if (!sj.is_number_unsigned() &&
          (!sj.is_number_integer() || sj.get<int64_t>() < 0))
        throw ConfigError("config.seed: expected a non-negative integer");
      seed = sj.get<uint64_t>();
    }
    if (seed_override) seed = *seed_override;
    if (!out_override.empty())
      outdir = out_override;
    else
      outdir = str_field(cfg, "output_dir", "config");
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + outdir + "': " + ec.message());

    // The echo is self-sufficient: re-running it reproduces the artifacts.
    json echo = cfg;
    echo["command"] = command;
    echo["seed"] = seed;
    echo["output_dir"] = outdir;

    Envelope env(command, seed, echo);
    int status;
    if (command == "forward")
      status = cmd_forward(cfg, outdir, seed, env);
    else if (command == "oracle")
      status = cmd_oracle(cfg, outdir, env);
    else if (command == "bridge")
      status = cmd_bridge(cfg, outdir, seed, env);
    else if (command == "inverse-param")
      status = cmd_inverse_param(cfg, config_path, outdir, seed, env);
    else if (command == "inverse-nonparam")
      status = cmd_inverse_nonparam(cfg, config_path, outdir, seed, env);
    else if (command == "report")
      status = cmd_report(cfg, config_path, outdir, env);
    else
      throw ConfigError("unknown command '" + command + "'");
    env.finish(outdir);
    if (status == 3) std::cerr << "run diverged; partial artifacts in " << outdir << "\n";
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace mptp
