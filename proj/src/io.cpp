#include "proplab/io.hpp"

#include "proplab/propagator.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace proplab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double x = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r' || end[-1] == '\t')) --end;
  const auto res = std::from_chars(begin, end, x);
  require(res.ec == std::errc() && res.ptr == end, "cannot parse number: '" + text + "'");
  return x;
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, "cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) ensure_directory(p.parent_path().string());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open " + path + " for writing");
  out << text;
  require(static_cast<bool>(out), "failed writing " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  if (r == 0) return MatrixXd();
  const auto c = static_cast<Eigen::Index>(rows.at(0).size());
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    require(static_cast<Eigen::Index>(rows.at(i).size()) == c, "ragged matrix in JSON");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows.at(i).at(j).get<double>();
  }
  return m;
}

json header(const TimeGrid& grid, double kappa, const std::string& kind) {
  return json{{"M", grid.size()}, {"T", grid.horizon()}, {"kappa", kappa}, {"kind", kind}};
}

}  // namespace

void write_matrix_csv(const std::string& path, const MatrixXd& m) {
  std::string text;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) text += ',';
      text += format_double(m(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

MatrixXd read_matrix_csv(const std::string& path) {
  const auto lines = lines_of(read_text(path));
  if (lines.empty()) return MatrixXd();
  const auto cols = static_cast<Eigen::Index>(split(lines.front()).size());
  MatrixXd m(static_cast<Eigen::Index>(lines.size()), cols);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    require(static_cast<Eigen::Index>(cells.size()) == cols, "ragged CSV row in " + path);
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = parse_double(cells[j]);
  }
  return m;
}

void write_kernel(const std::string& path, const VectorXd& values, const TimeGrid& grid, double kappa,
                  const std::string& kind) {
  write_matrix_csv(path, values);
  write_json(path + ".json", header(grid, kappa, kind));
}

void write_propagator(const std::string& path, const MatrixXd& g, const TimeGrid& grid, double kappa,
                      const std::string& kind) {
  write_matrix_csv(path, g);
  write_json(path + ".json", header(grid, kappa, kind));
}

void write_dataset(const std::string& dir, const Dataset& data) {
  ensure_directory(dir);
  const Provenance& p = data.provenance;
  json initial = json::array();
  for (const auto& e : data.episodes) initial.push_back(e.S(0));
  json meta{
      {"M", data.grid.size()},
      {"T", data.grid.horizon()},
      {"N", data.size()},
      {"generator", p.generator},
      {"seed", p.seed},
      {"seed_rule", "episode n uses splitmix64(seed + n); streams 0/1/2 = signal/noise/strategy"},
      {"noise_scale", p.noise_scale},
      {"config",
       {{"inventory", {p.mix.inventory.lo, p.mix.inventory.hi}},
        {"rho_jitter", {p.mix.rho_jitter.lo, p.mix.rho_jitter.hi}},
        {"kappa_jitter", {p.mix.kappa_jitter.lo, p.mix.kappa_jitter.hi}},
        {"mu_jitter", {p.mix.mu_jitter.lo, p.mix.mu_jitter.hi}},
        {"base_kappa", p.mix.base_kappa},
        {"base_rho", p.mix.base_rho},
        {"base_mu", p.mix.base_mu},
        {"weights", {p.mix.weight_twap, p.mix.weight_ow, p.mix.weight_trend}},
        {"sigma_price", p.mix.sigma_price},
        {"initial_price", p.mix.initial_price},
        {"signal", {{"mu", p.signal.mu}, {"sigma", p.signal.sigma}, {"i0", p.signal.i0}}},
        {"speed_mean", p.speed_mean},
        {"speed_stddev", p.speed_stddev}}},
      {"true_propagator", matrix_to_json(p.true_propagator)},
      {"initial_price", initial},
  };
  write_json(dir + "/meta.json", meta);

  std::string text = "episode,step,S,u,A,y\n";
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Episode& e = data.episodes[n];
    for (Eigen::Index i = 0; i < e.u.size(); ++i) {
      text += std::to_string(n) + ',' + std::to_string(i) + ',' + format_double(e.S(i + 1)) + ',' +
              format_double(e.u(i)) + ',' + format_double(e.A(i)) + ',' + format_double(e.y(i)) + '\n';
    }
  }
  write_text(dir + "/episodes.csv", text);
}

Dataset read_dataset(const std::string& dir) {
  const json meta = read_json(dir + "/meta.json");
  Dataset d;
  try {
    d.grid = TimeGrid(meta.at("M").get<std::size_t>(), meta.at("T").get<double>());
    const auto n_episodes = meta.at("N").get<std::size_t>();
    Provenance& p = d.provenance;
    p.generator = meta.at("generator").get<std::string>();
    p.seed = meta.at("seed").get<std::uint64_t>();
    p.noise_scale = meta.at("noise_scale").get<double>();
    const json& c = meta.at("config");
    auto range = [](const json& a) { return UniformRange{a.at(0).get<double>(), a.at(1).get<double>()}; };
    p.mix.inventory = range(c.at("inventory"));
    p.mix.rho_jitter = range(c.at("rho_jitter"));
    p.mix.kappa_jitter = range(c.at("kappa_jitter"));
    p.mix.mu_jitter = range(c.at("mu_jitter"));
    p.mix.base_kappa = c.at("base_kappa").get<double>();
    p.mix.base_rho = c.at("base_rho").get<double>();
    p.mix.base_mu = c.at("base_mu").get<double>();
    p.mix.weight_twap = c.at("weights").at(0).get<double>();
    p.mix.weight_ow = c.at("weights").at(1).get<double>();
    p.mix.weight_trend = c.at("weights").at(2).get<double>();
    p.mix.sigma_price = c.at("sigma_price").get<double>();
    p.mix.initial_price = c.at("initial_price").get<double>();
    p.signal.mu = c.at("signal").at("mu").get<double>();
    p.signal.sigma = c.at("signal").at("sigma").get<double>();
    p.signal.i0 = c.at("signal").at("i0").get<double>();
    p.speed_mean = c.at("speed_mean").get<double>();
    p.speed_stddev = c.at("speed_stddev").get<double>();
    p.true_propagator = matrix_from_json(meta.at("true_propagator"));
    const json& initial = meta.at("initial_price");
    require(initial.size() == n_episodes, "read_dataset: initial price list does not match N");

    const auto m = static_cast<Eigen::Index>(d.grid.size());
    d.episodes.resize(n_episodes);
    for (std::size_t n = 0; n < n_episodes; ++n) {
      Episode& e = d.episodes[n];
      e.S.resize(m + 1);
      e.u.resize(m);
      e.A.resize(m);
      e.y.resize(m);
      e.S(0) = initial.at(n).get<double>();
    }
    const auto lines = lines_of(read_text(dir + "/episodes.csv"));
    require(!lines.empty() && lines.front() == "episode,step,S,u,A,y", "read_dataset: unexpected episodes.csv header");
    require(lines.size() == 1 + n_episodes * static_cast<std::size_t>(m), "read_dataset: row count mismatch");
    for (std::size_t k = 1; k < lines.size(); ++k) {
      const auto cells = split(lines[k]);
      require(cells.size() == 6, "read_dataset: expected 6 columns");
      const auto n = static_cast<std::size_t>(std::stoull(cells[0]));
      const auto i = static_cast<Eigen::Index>(std::stoll(cells[1]));
      require(n < n_episodes && i >= 0 && i < m, "read_dataset: index out of range");
      Episode& e = d.episodes[n];
      e.S(i + 1) = parse_double(cells[2]);
      e.u(i) = parse_double(cells[3]);
      e.A(i) = parse_double(cells[4]);
      e.y(i) = parse_double(cells[5]);
    }
  } catch (const json::exception& e) {
    throw ValidationError("read_dataset: malformed meta.json: " + std::string(e.what()));
  }
  return d;
}

void write_estimation(const std::string& dir, const EstimationResult& r, const TimeGrid& grid, const json& extra) {
  ensure_directory(dir);
  const bool volterra = r.mode == EstimationMode::volterra;
  const std::string kind = volterra ? "volterra_estimate" : "convolution_estimate";
  if (volterra) {
    write_propagator(dir + "/G_tilde.csv", r.unconstrained, grid, r.kappa, kind);
    write_propagator(dir + "/G_proj.csv", r.projected, grid, r.kappa, kind);
  } else {
    write_kernel(dir + "/K_tilde.csv", r.unconstrained.col(0), grid, r.kappa, kind);
    write_kernel(dir + "/K_proj.csv", r.projected.col(0), grid, r.kappa, kind);
  }
  write_matrix_csv(dir + "/gram.csv", r.gram.matrix);
  json report{{"mode", to_string(r.mode)},
              {"M", grid.size()},
              {"T", grid.horizon()},
              {"lambda", r.gram.lambda},
              {"R", r.noise_scale},
              {"delta", r.delta},
              {"kappa", r.kappa},
              {"kernel_bound", r.kernel_bound},
              {"C_N", r.confidence},
              {"log_det", r.gram.log_det},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"coercivity_lift", r.lift}};
  for (auto it = extra.begin(); it != extra.end(); ++it) report[it.key()] = it.value();
  write_json(dir + "/report.json", report);
}

EstimationResult read_estimation(const std::string& dir) {
  const json report = read_json(dir + "/report.json");
  EstimationResult r;
  try {
    r.mode = estimation_mode_from_string(report.at("mode").get<std::string>());
    r.noise_scale = report.at("R").get<double>();
    r.delta = report.at("delta").get<double>();
    r.kappa = report.at("kappa").get<double>();
    r.kernel_bound = report.at("kernel_bound").get<double>();
    r.confidence = report.at("C_N").get<double>();
    r.iterations = report.at("iterations").get<int>();
    r.converged = report.at("converged").get<bool>();
    r.lift = report.at("coercivity_lift").get<double>();
    r.gram = factor_gram(read_matrix_csv(dir + "/gram.csv"), report.at("lambda").get<double>());
  } catch (const json::exception& e) {
    throw ValidationError("read_estimation: malformed report.json: " + std::string(e.what()));
  }
  if (r.mode == EstimationMode::volterra) {
    r.unconstrained = read_matrix_csv(dir + "/G_tilde.csv");
    r.projected = read_matrix_csv(dir + "/G_proj.csv");
  } else {
    r.unconstrained = read_matrix_csv(dir + "/K_tilde.csv");
    r.projected = read_matrix_csv(dir + "/K_proj.csv");
  }
  require(r.projected.rows() == r.gram.size(), "read_estimation: estimate and Gram matrix sizes differ");
  return r;
}

void write_strategy(const std::string& path, const Strategy& s, const TimeGrid& grid, const json& extra) {
  std::string text = "step,t,u,inventory\n";
  double remaining = s.x0;
  for (Eigen::Index i = 0; i < s.u.size(); ++i) {
    remaining -= s.u(i);
    text += std::to_string(i) + ',' + format_double(grid.time(static_cast<std::size_t>(i))) + ',' +
            format_double(s.u(i)) + ',' + format_double(remaining) + '\n';
  }
  write_text(path, text);
  json side{{"kind", to_string(s.kind)},
            {"x0", s.x0},
            {"fuel_constrained", s.fuel_constrained},
            {"objective", s.diagnostics.objective},
            {"penalty", s.diagnostics.penalty},
            {"solver", {{"iterations", s.diagnostics.iterations},
                        {"converged", s.diagnostics.converged},
                        {"ball_active", s.diagnostics.ball_active}}}};
  for (auto it = extra.begin(); it != extra.end(); ++it) side[it.key()] = it.value();
  write_json(path + ".json", side);
}

Strategy read_strategy(const std::string& path) {
  const json side = read_json(path + ".json");
  Strategy s;
  try {
    s.kind = strategy_kind_from_string(side.at("kind").get<std::string>());
    s.x0 = side.at("x0").get<double>();
    s.fuel_constrained = side.at("fuel_constrained").get<bool>();
    s.diagnostics.objective = side.at("objective").get<double>();
    s.diagnostics.penalty = side.at("penalty").get<double>();
    s.diagnostics.iterations = side.at("solver").at("iterations").get<int>();
    s.diagnostics.converged = side.at("solver").at("converged").get<bool>();
    s.diagnostics.ball_active = side.at("solver").at("ball_active").get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError("read_strategy: malformed sidecar: " + std::string(e.what()));
  }
  const auto lines = lines_of(read_text(path));
  require(!lines.empty() && lines.front() == "step,t,u,inventory", "read_strategy: unexpected header in " + path);
  s.u.resize(static_cast<Eigen::Index>(lines.size() - 1));
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto cells = split(lines[k]);
    require(cells.size() == 4, "read_strategy: expected 4 columns");
    s.u(static_cast<Eigen::Index>(k - 1)) = parse_double(cells[2]);
  }
  return s;
}

void Table::add(std::vector<std::string> row) {
  require(row.size() == columns.size(), "Table::add: row width does not match the header");
  rows.push_back(std::move(row));
}

void Table::write(const std::string& path) const {
  std::string text;
  for (std::size_t j = 0; j < columns.size(); ++j) text += (j ? "," : "") + columns[j];
  text += '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) text += (j ? "," : "") + row[j];
    text += '\n';
  }
  write_text(path, text);
}

}  // namespace proplab
