#include "proplab/execution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace proplab {

Strategy ow_closed_form(const MatrixXd& g, double x0) {
  require(g.rows() == g.cols() && g.rows() >= 1, "ow_closed_form: propagator must be square and nonempty");
  const MatrixXd sym = g + g.transpose();
  Eigen::LLT<MatrixXd> llt(sym);
  require(llt.info() == Eigen::Success, "ow_closed_form: G + G^T is not positive definite");
  const VectorXd x = llt.solve(VectorXd::Ones(g.rows()));
  Strategy s;
  s.u = x0 * x / x.sum();
  s.x0 = x0;
  s.kind = StrategyKind::reference;
  return s;
}

OptimalControlWorkspace build_workspace(const MatrixXd& g) {
  const Eigen::Index m = g.rows();
  require(g.cols() == m && m >= 1, "build_workspace: propagator must be square and nonempty");
  require(g.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().isZero(0.0),
          "build_workspace: propagator must be lower triangular");
  OptimalControlWorkspace ws;
  ws.eta = 0.5 * min_symmetric_eigenvalue(g);
  require(ws.eta > 0.0, "build_workspace: G + G^T must be positive definite");
  ws.g_tilde = g;
  ws.g_tilde.diagonal().array() -= ws.eta;
  const MatrixXd sym = ws.g_tilde + ws.g_tilde.transpose();

  ws.response = MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    MatrixXd d = MatrixXd::Zero(m, m);
    d.bottomRows(m - i) = sym.bottomRows(m - i);
    d.diagonal().array() += 2.0 * ws.eta;
    Eigen::PartialPivLU<MatrixXd> lu(d.transpose());
    require(lu.rcond() > 1e-14, "build_workspace: D matrix is numerically singular");
    ws.response.row(i) = lu.solve(VectorXd(ws.g_tilde.col(i))).transpose();
  }

  ws.k_matrix = ws.g_tilde;
  for (Eigen::Index i = 1; i < m; ++i) {
    const Eigen::RowVectorXd correction =
        ws.response.row(i).tail(m - i) * ws.g_tilde.bottomRows(m - i).leftCols(i);
    ws.k_matrix.row(i).head(i) -= correction;
  }
  ws.k_matrix.triangularView<Eigen::StrictlyUpper>().setZero();

  ws.a.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) ws.a(i) = -1.0 + ws.response.row(i).tail(m - i).sum();

  ws.system = ws.k_matrix;
  ws.system.diagonal().array() += 2.0 * ws.eta;
  require(ws.system.diagonal().minCoeff() > 0.0, "build_workspace: 2 eta I + K has a nonpositive diagonal");
  ws.column_sums = ws.system.triangularView<Eigen::Lower>().transpose().solve(VectorXd::Ones(m));

  ws.b.resize(m);
  ws.h.resize(m);
  double tail = 0.0;
  for (Eigen::Index r = m - 1; r >= 0; --r) {
    tail += ws.column_sums(r) * ws.a(r);
    ws.b(r) = tail;
    ws.h(r) = ws.column_sums(r) * ws.a(r);
  }
  return ws;
}

SignalPath zero_path(const TimeGrid& grid) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  return SignalPath{VectorXd::Zero(m), VectorXd::Zero(m), grid};
}

Strategy optimal_strategy(const MatrixXd& g, const SignalModel& model, const SignalPath& path, double x0,
                          OptimalControlWorkspace* workspace) {
  const Eigen::Index m = g.rows();
  require(path.A.size() == m && path.I.size() == m, "optimal_strategy: signal path length mismatch");
  OptimalControlWorkspace ws = build_workspace(g);
  const TimeGrid& grid = path.grid;

  // forecast(r, k) = E_{t_r}[A_{t_k}] for k >= r.
  MatrixXd forecast = MatrixXd::Zero(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const SignalState state = state_at(path, static_cast<std::size_t>(r));
    forecast(r, r) = path.A(r);
    for (Eigen::Index k = r + 1; k < m; ++k) {
      forecast(r, k) = model.predict_A(state, grid.time(static_cast<std::size_t>(k)));
    }
  }

  ws.g.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    ws.g(j) = -path.A(j) + ws.response.row(j).tail(m - j).dot(forecast.row(j).tail(m - j));
  }

  // c_r = sum_j s_j E_{t_r}[g_j]; future g_j are forecast through the tower property.
  ws.c.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    double c = ws.column_sums.head(r + 1).dot(ws.g.head(r + 1));
    for (Eigen::Index j = r + 1; j < m; ++j) {
      const double eg = -forecast(r, j) + ws.response.row(j).tail(m - j).dot(forecast.row(r).tail(m - j));
      c += ws.column_sums(j) * eg;
    }
    ws.c(r) = c;
  }

  const double b_scale = ws.b.cwiseAbs().maxCoeff();
  auto check_b = [&](Eigen::Index r) {
    if (!(std::abs(ws.b(r)) > 1e-14 * b_scale)) {
      throw ConvergenceError("optimal_strategy: degenerate multiplier recursion (b vanishes)");
    }
  };
  ws.lambda_path.resize(m);
  check_b(0);
  ws.lambda_path(0) = (x0 - ws.c(0)) / ws.b(0);
  for (Eigen::Index r = 0; r + 1 < m; ++r) {
    check_b(r + 1);
    ws.lambda_path(r + 1) =
        ((ws.b(r) - ws.h(r)) * ws.lambda_path(r) - (ws.c(r + 1) - ws.c(r))) / ws.b(r + 1);
  }

  const VectorXd rhs = ws.g + ws.a.cwiseProduct(ws.lambda_path);
  Strategy s;
  s.u = ws.system.triangularView<Eigen::Lower>().solve(rhs);
  s.x0 = x0;
  s.kind = StrategyKind::optimal;
  if (workspace) *workspace = std::move(ws);
  return s;
}

Strategy optimal_strategy(const Propagator<double>& g, const SignalModel& model, const SignalPath& path, double x0,
                          OptimalControlWorkspace* workspace) {
  return optimal_strategy(g.entries(), model, path, x0, workspace);
}

Strategy greedy_strategy(const MatrixXd& g_est, const SignalModel& model, const SignalPath& path, double x0) {
  Strategy s = optimal_strategy(g_est, model, path, x0);
  s.kind = StrategyKind::greedy;
  return s;
}

VectorXd expected_signal(const SignalModel& model, const SignalPath& path) {
  const auto m = path.A.size();
  VectorXd out(m);
  const SignalState start = state_at(path, 0);
  for (Eigen::Index k = 0; k < m; ++k) {
    out(k) = k == 0 ? path.A(0) : model.predict_A(start, path.grid.time(static_cast<std::size_t>(k)));
  }
  return out;
}

double penalty_l1(const VectorXd& u, const GramInfo& gram_v, double confidence, double strategy_bound) {
  require(u.size() == gram_v.size(), "penalty_l1: dimension mismatch");
  return strategy_bound * confidence * (gram_v.inv_sqrt_factor * u).norm();
}

MatrixXd convolution_penalty_matrix(const GramInfo& gram_w) {
  const Eigen::Index m = gram_w.size();
  const MatrixXd w_inv = gram_w.inv_sqrt_factor * gram_w.inv_sqrt_factor;
  MatrixXd p = MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      double sum = 0.0;
      for (Eigen::Index i = a; i < m; ++i) sum += w_inv(i - a, i - b);
      p(a, b) = sum;
      p(b, a) = sum;
    }
  }
  return p;
}

double penalty_l2(const VectorXd& u, const GramInfo& gram_w, double confidence, double strategy_bound) {
  require(u.size() == gram_w.size(), "penalty_l2: dimension mismatch");
  const double q = u.dot(convolution_penalty_matrix(gram_w) * u);
  return strategy_bound * confidence * std::sqrt(std::max(0.0, q));
}

void PessimisticConfig::validate() const {
  require(delta > 0.0 && delta < 1.0, "PessimisticConfig: delta must lie in (0, 1)");
  require(smoothing > 0.0, "PessimisticConfig: smoothing must be positive");
  require(tolerance > 0.0 && max_iterations > 0, "PessimisticConfig: invalid solver limits");
  require(noise_scale >= 0.0, "PessimisticConfig: noise scale must be nonnegative");
}

namespace {

double default_strategy_bound(const PessimisticConfig& config, double x0, Eigen::Index m) {
  return config.strategy_bound >= 0.0 ? config.strategy_bound
                                      : 10.0 * std::abs(x0) * std::sqrt(static_cast<double>(m));
}

}  // namespace

PessimisticConstants resolve_volterra_constants(const MatrixXd& g_est, const GramInfo& gram_v,
                                                const PessimisticConfig& config, double x0) {
  config.validate();
  PessimisticConstants k;
  k.strategy_bound = default_strategy_bound(config, x0, g_est.rows());
  k.kernel_bound = config.kernel_bound >= 0.0 ? config.kernel_bound : 2.0 * g_est.norm();
  k.confidence = config.confidence >= 0.0
                     ? config.confidence
                     : confidence_constant_volterra(gram_v, config.noise_scale, config.delta, k.kernel_bound);
  return k;
}

PessimisticConstants resolve_convolution_constants(const VectorXd& k_est, const GramInfo& gram_w,
                                                   const PessimisticConfig& config, double x0) {
  config.validate();
  PessimisticConstants k;
  k.strategy_bound = default_strategy_bound(config, x0, k_est.size());
  k.kernel_bound = config.kernel_bound >= 0.0 ? config.kernel_bound : 2.0 * k_est.norm();
  k.confidence = config.confidence >= 0.0
                     ? config.confidence
                     : confidence_constant_convolution(gram_w, config.noise_scale, config.delta, k.kernel_bound);
  return k;
}

namespace {

struct PenalizedObjective {
  const MatrixXd& g;
  const VectorXd& signal;
  const MatrixXd& p;
  double weight;
  double eps;
  double ridge;  // multiplier of |u|^2 for the ball constraint

  double value(const VectorXd& u) const {
    const double root = std::sqrt(u.dot(p * u) + eps * eps);
    return u.dot(g * u) + signal.dot(u) + weight * root + ridge * u.squaredNorm();
  }
};

struct NewtonResult {
  VectorXd u;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step
};

NewtonResult newton_on_hyperplane(const PenalizedObjective& f, const MatrixXd& basis, const VectorXd& start,
                                  const PessimisticConfig& config) {
  const MatrixXd sym = f.g + f.g.transpose();
  NewtonResult out;
  VectorXd u = start;
  double value = f.value(u);
  out.history.push_back(value);
  for (out.iterations = 0; out.iterations < config.max_iterations; ++out.iterations) {
    const VectorXd pu = f.p * u;
    const double root = std::sqrt(u.dot(pu) + f.eps * f.eps);
    const VectorXd grad = sym * u + f.signal + f.weight * pu / root + 2.0 * f.ridge * u;
    MatrixXd hess = sym + (f.weight / root) * f.p - (f.weight / (root * root * root)) * pu * pu.transpose();
    hess.diagonal().array() += 2.0 * f.ridge;
    const VectorXd rg = basis.transpose() * grad;
    const MatrixXd rh = basis.transpose() * hess * basis;
    const VectorXd step = basis * VectorXd(rh.ldlt().solve(-rg));
    const double slope = grad.dot(step);
    if (!(slope < 0.0)) {
      out.converged = true;
      break;
    }
    // Newton decrement: predicted objective decrease is -slope / 2.
    if (-slope <= 2.0 * config.tolerance * std::max(1.0, std::abs(value))) {
      const double tv = f.value(u + step);
      if (tv <= value) {
        u += step;
        value = tv;
        out.history.push_back(value);
      }
      out.converged = true;
      ++out.iterations;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const VectorXd trial = u + t * step;
      const double tv = f.value(trial);
      if (tv <= value + 1e-4 * t * slope) {
        u = trial;
        value = tv;
        out.history.push_back(value);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No decrease available at machine precision: stationary up to rounding.
      out.converged = true;
      break;
    }
  }
  out.u = u;
  return out;
}

}  // namespace

Strategy minimize_penalized_cost(const MatrixXd& g, const VectorXd& signal, const MatrixXd& penalty_matrix,
                                 double weight, double x0, double strategy_bound, const PessimisticConfig& config) {
  config.validate();
  const Eigen::Index m = g.rows();
  require(g.cols() == m && signal.size() == m && penalty_matrix.rows() == m && penalty_matrix.cols() == m,
          "minimize_penalized_cost: dimension mismatch");
  require(weight >= 0.0, "minimize_penalized_cost: penalty weight must be nonnegative");
  require(min_symmetric_eigenvalue(g) > 0.0, "minimize_penalized_cost: G + G^T must be positive definite");
  const VectorXd start = VectorXd::Constant(m, x0 / static_cast<double>(m));
  require(strategy_bound >= start.norm(), "minimize_penalized_cost: strategy bound excludes the uniform strategy");

  // Orthonormal basis of the hyperplane direction space {sum(d) = 0}.
  MatrixXd basis;
  if (m > 1) {
    Eigen::HouseholderQR<MatrixXd> qr(VectorXd::Ones(m));
    basis = MatrixXd(qr.householderQ()).rightCols(m - 1);
  } else {
    basis = MatrixXd::Zero(1, 0);
  }
  const double eps = config.smoothing * std::max(1.0, std::abs(x0));
  PenalizedObjective f{g, signal, penalty_matrix, weight, eps, 0.0};

  Strategy s;
  s.x0 = x0;
  s.kind = StrategyKind::pessimistic;
  NewtonResult r = m > 1 ? newton_on_hyperplane(f, basis, start, config) : NewtonResult{start, 0, true, {}};
  int total_iterations = r.iterations;

  if (r.u.norm() > strategy_bound) {
    // Ball active: bisect on the multiplier of |u|^2 until the norm matches.
    s.diagnostics.ball_active = true;
    double lo = 0.0;
    double hi = 1e-12 * std::max(1.0, g.norm());
    for (int k = 0; k < 200; ++k) {
      f.ridge = hi;
      r = newton_on_hyperplane(f, basis, start, config);
      total_iterations += r.iterations;
      if (r.u.norm() <= strategy_bound) break;
      lo = hi;
      hi *= 4.0;
    }
    for (int k = 0; k < 80; ++k) {
      f.ridge = 0.5 * (lo + hi);
      NewtonResult mid = newton_on_hyperplane(f, basis, start, config);
      total_iterations += mid.iterations;
      if (mid.u.norm() <= strategy_bound) {
        hi = f.ridge;
        r = mid;
      } else {
        lo = f.ridge;
      }
    }
    f.ridge = 0.0;
  }

  // Restore the fuel identity exactly against accumulated rounding.
  s.u = r.u;
  s.u.array() += (x0 - s.u.sum()) / static_cast<double>(m);
  s.diagnostics.iterations = total_iterations;
  s.diagnostics.converged = r.converged;
  s.diagnostics.objective_history = std::move(r.history);
  s.diagnostics.penalty = weight * std::sqrt(s.u.dot(penalty_matrix * s.u));
  s.diagnostics.objective = s.u.dot(g * s.u) + signal.dot(s.u) + s.diagnostics.penalty;
  return s;
}

Strategy pessimistic_strategy_volterra(const MatrixXd& g_est, const GramInfo& gram_v, const PessimisticConfig& config,
                                       const VectorXd& signal, double x0) {
  require(gram_v.size() == g_est.rows(), "pessimistic_strategy_volterra: dimension mismatch");
  const PessimisticConstants k = resolve_volterra_constants(g_est, gram_v, config, x0);
  const MatrixXd p = gram_v.inv_sqrt_factor * gram_v.inv_sqrt_factor;
  return minimize_penalized_cost(g_est, signal, p, k.strategy_bound * k.confidence, x0, k.strategy_bound, config);
}

Strategy pessimistic_strategy_convolution(const VectorXd& k_est, const GramInfo& gram_w,
                                          const PessimisticConfig& config, const VectorXd& signal, double x0) {
  require(gram_w.size() == k_est.size(), "pessimistic_strategy_convolution: dimension mismatch");
  const MatrixXd g = toeplitz_lower(k_est);
  const PessimisticConstants k = resolve_convolution_constants(k_est, gram_w, config, x0);
  const MatrixXd p = convolution_penalty_matrix(gram_w);
  return minimize_penalized_cost(g, signal, p, k.strategy_bound * k.confidence, x0, k.strategy_bound, config);
}

}  // namespace proplab
