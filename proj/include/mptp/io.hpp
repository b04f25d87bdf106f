#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mptp/inverse.hpp"
#include "mptp/path.hpp"

namespace mptp {

inline constexpr const char* kCodeVersion = "0.1.0";

// Configuration or input-file problem: reported with context and mapped to
// exit status 2 by the command-line driver.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- CSV artifacts ----
// All numeric series use decimal-point numerals with 17 significant digits.

// Header `t,z1,...,zd`, one row per node.
void write_path_csv(const PathSample& path, const std::string& file);
PathSample read_path_csv(const std::string& file);

// Generic numeric table with a header row (training histories, reports).
void write_table_csv(const std::string& file, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

// Observations share the path schema `t,z1,...,zd`.
ObservationSet read_observations_csv(const std::string& file);

// Drift anchors: header `x1,...,xd,f1,...,fd`.
void read_anchors_csv(const std::string& file, int dim, std::vector<double>& anchor_x,
                      std::vector<double>& anchor_f);

// ---- Experiment driver ----
// Parses the JSON experiment config, runs the requested command and writes
// artifacts (path.csv / history.csv / result.json, ensemble/*.csv for bridge
// runs, drift.csv for nonparametric inverse runs, report.csv for report runs)
// into the output directory. Every result.json embeds the seed, the full
// config echo, the code version and the wall time; on divergence the partial
// artifacts are written and flagged.
//
// Exit status: 0 success, 2 config error, 3 numerical divergence.
int run_experiment(const std::string& command, const std::string& config_path,
                   const std::string& out_override = "", const uint64_t* seed_override = nullptr);

}  // namespace mptp
