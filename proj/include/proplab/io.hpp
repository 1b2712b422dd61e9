#pragma once

#include "proplab/estimation.hpp"
#include "proplab/market.hpp"
#include "proplab/strategy.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace proplab {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

/// Dense row-major CSV without a header.
void write_matrix_csv(const std::string& path, const MatrixXd& m);
MatrixXd read_matrix_csv(const std::string& path);

/// Kernel as a single-column CSV plus `<path>.json` with {M, T, kappa, kind}.
void write_kernel(const std::string& path, const VectorXd& values, const TimeGrid& grid, double kappa,
                  const std::string& kind);
/// Propagator as a row-major CSV plus `<path>.json` with {M, T, kappa, kind}.
void write_propagator(const std::string& path, const MatrixXd& g, const TimeGrid& grid, double kappa,
                      const std::string& kind);

/// Dataset directory: meta.json and episodes.csv (episode, step, S, u, A, y),
/// where S on row i is S_{i+1}; S_1 of each episode is stored in meta.json.
void write_dataset(const std::string& dir, const Dataset& data);
Dataset read_dataset(const std::string& dir);

/// Estimation directory: G_tilde.csv/G_proj.csv or K_tilde.csv/K_proj.csv,
/// gram.csv and report.json.
void write_estimation(const std::string& dir, const EstimationResult& r, const TimeGrid& grid,
                      const nlohmann::json& extra = nlohmann::json::object());
EstimationResult read_estimation(const std::string& dir);

/// Strategy CSV (step, t, u, inventory) plus `<path>.json` sidecar.
void write_strategy(const std::string& path, const Strategy& s, const TimeGrid& grid,
                    const nlohmann::json& extra = nlohmann::json::object());
Strategy read_strategy(const std::string& path);

/// Tidy CSV with a header row; every cell is written verbatim.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  void write(const std::string& path) const;
};

void ensure_directory(const std::string& dir);

}  // namespace proplab
