// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Discrete optimal transport between weighted atom sets.
//
//  - sinkhorn(): entropic OT, log-stabilized scaling iterations. The reported
//    cost is the transport cost sum(gamma * C) of the entropic plan; the
//    entropy term is not included.
//  - exact_ot(): transportation simplex (Bland's rule), small instances only.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsrobust/error.hpp"

namespace gsrobust {

/// Strictly positive probability masses summing to one.
struct DiscreteMeasure {
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
};

inline void validate_measure(const DiscreteMeasure& m, const char* what = "measure") {
  if (m.weights.empty()) fail(ErrorKind::invariant, std::string(what) + " has no atoms");
  double sum = 0.0;
  for (double w : m.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) fail(ErrorKind::invariant, std::string(what) + " has a non-positive weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::invariant, std::string(what) + " weights do not sum to 1");
}

/// Normalizes positive masses into a DiscreteMeasure.
inline DiscreteMeasure make_measure(std::vector<double> masses) {
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (!(total > 0.0)) fail(ErrorKind::data, "cannot normalize masses with a non-positive total");
  for (double& w : masses) w /= total;
  DiscreteMeasure m{std::move(masses)};
  validate_measure(m);
  return m;
}

inline DiscreteMeasure uniform_measure(std::size_t n) {
  return DiscreteMeasure{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

/// Dense row-major rows x cols grid of nonnegative costs.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorKind::contract, "cost matrix data size mismatch");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void validate_cost(const CostMatrix& c) {
  if (c.rows() == 0 || c.cols() == 0) fail(ErrorKind::invariant, "cost matrix is empty");
  for (double v : c.data())
    if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::invariant, "cost matrix entries must be finite and nonnegative");
}

struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> coupling;  // row-major; empty when the caller asked not to keep it
  double cost = 0.0;             // sum gamma_ij * C_ij
  std::size_t iterations = 0;
  double marginal_error = 0.0;   // max |row/col sum - weight|
  bool converged = true;
  std::vector<double> row_potential;
  std::vector<double> col_potential;

  double at(std::size_t i, std::size_t j) const { return coupling[i * cols + j]; }
};

/// Thrown when Sinkhorn stops at max_iter far from feasibility; carries the partial plan.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, TransportPlan plan)
      : Error(ErrorKind::convergence, message), plan_(std::move(plan)) {}
  const TransportPlan& plan() const noexcept { return plan_; }

 private:
  TransportPlan plan_;
};

struct SinkhornOptions {
  double epsilon = 0.0;  // <= 0 selects default_epsilon(cost)
  std::size_t max_iter = 10'000;
  double tolerance = 1e-6;
  bool keep_coupling = true;
  // Warm-start through epsilon = median cost, /2, /4, ... before the target.
  // max_iter applies to each stage.
  bool epsilon_scaling = true;
};

inline constexpr double kDefaultEpsilonFactor = 0.05;

/// factor * median of the strictly positive cost entries (1.0 if there are none).
inline double default_epsilon(const CostMatrix& cost, double factor = kDefaultEpsilonFactor) {
  std::vector<double> positive;
  positive.reserve(cost.data().size());
  for (double v : cost.data())
    if (v > 0.0) positive.push_back(v);
  if (positive.empty()) return factor;
  auto mid = positive.begin() + static_cast<std::ptrdiff_t>(positive.size() / 2);
  std::nth_element(positive.begin(), mid, positive.end());
  return factor * *mid;
}

namespace sinkhorn_detail {

// Exact log-domain half steps: f = eps log a - eps LSE_j((g_j - C_ij)/eps), then g likewise.
inline void log_domain_step(const CostMatrix& c, std::span<const double> log_a, std::span<const double> log_b,
                            double eps, std::vector<double>& f, std::vector<double>& g) {
  const std::size_t m = c.rows(), n = c.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, (g[j] - c(i, j)) / eps);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp((g[j] - c(i, j)) / eps - mx);
    f[i] = eps * log_a[i] - eps * (mx + std::log(s));
  }
  std::vector<double> mx(n, -std::numeric_limits<double>::infinity()), s(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) mx[j] = std::max(mx[j], (f[i] - c(i, j)) / eps);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) s[j] += std::exp((f[i] - c(i, j)) / eps - mx[j]);
  for (std::size_t j = 0; j < n; ++j) g[j] = eps * log_b[j] - eps * (mx[j] + std::log(s[j]));
}

inline void build_kernel(const CostMatrix& c, double eps, const std::vector<double>& f, const std::vector<double>& g,
                         std::vector<double>& kernel) {
  const std::size_t m = c.rows(), n = c.cols();
  kernel.resize(m * n);
  const double inv = 1.0 / eps;
  for (std::size_t i = 0; i < m; ++i) {
    const double* crow = &c.data()[i * n];
    double* krow = &kernel[i * n];
    for (std::size_t j = 0; j < n; ++j) krow[j] = std::exp((f[i] + g[j] - crow[j]) * inv);
  }
}

}  // namespace sinkhorn_detail

/// Entropic OT with kernel exp(-C/eps), stabilized by absorbing the scalings
/// into log-potentials whenever they drift or the kernel underflows.
inline TransportPlan sinkhorn(const CostMatrix& cost, const DiscreteMeasure& source, const DiscreteMeasure& target,
                              SinkhornOptions options = {}) {
  validate_cost(cost);
  validate_measure(source, "source measure");
  validate_measure(target, "target measure");
  if (cost.rows() != source.size() || cost.cols() != target.size())
    fail(ErrorKind::contract, "sinkhorn: cost matrix shape does not match the measures");
  if (options.epsilon <= 0.0) options.epsilon = default_epsilon(cost);
  if (!(options.tolerance > 0.0)) fail(ErrorKind::contract, "sinkhorn: tolerance must be positive");

  const std::size_t m = cost.rows(), n = cost.cols();
  double eps = options.epsilon;
  const auto& a = source.weights;
  const auto& b = target.weights;
  std::vector<double> log_a(m), log_b(n);
  for (std::size_t i = 0; i < m; ++i) log_a[i] = std::log(a[i]);
  for (std::size_t j = 0; j < n; ++j) log_b[j] = std::log(b[j]);

  std::vector<double> f(m, 0.0), g(n, 0.0), u(m, 1.0), v(n, 1.0), kv(m), ktu(n), kernel;

  constexpr double kAbsorbAbove = 1e8;
  constexpr double kTiny = 1e-280;
  auto absorb = [&] {
    for (std::size_t i = 0; i < m; ++i) f[i] += eps * std::log(u[i]);
    for (std::size_t j = 0; j < n; ++j) g[j] += eps * std::log(v[j]);
    std::fill(u.begin(), u.end(), 1.0);
    std::fill(v.begin(), v.end(), 1.0);
  };
  auto restabilize = [&] {
    absorb();
    sinkhorn_detail::log_domain_step(cost, log_a, log_b, eps, f, g);
    sinkhorn_detail::build_kernel(cost, eps, f, g, kernel);
  };

  // Runs scaling iterations at the current eps from the current potentials.
  auto solve_stage = [&](double tolerance, std::size_t& it) {
    sinkhorn_detail::log_domain_step(cost, log_a, log_b, eps, f, g);
    sinkhorn_detail::build_kernel(cost, eps, f, g, kernel);
    for (it = 0; it < options.max_iter; ++it) {
      bool underflow = false;
      double err = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double* krow = &kernel[i * n];
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += krow[j] * v[j];
        kv[i] = s;
        err = std::max(err, std::abs(u[i] * s - a[i]));
        underflow = underflow || !(s > kTiny);
      }
      // Column sums are exact after every v-update, so the row error is the marginal error.
      if (!underflow && err < tolerance) return true;
      if (underflow) {
        restabilize();
        continue;
      }
      for (std::size_t i = 0; i < m; ++i) u[i] = a[i] / kv[i];
      std::fill(ktu.begin(), ktu.end(), 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        const double* krow = &kernel[i * n];
        const double ui = u[i];
        for (std::size_t j = 0; j < n; ++j) ktu[j] += krow[j] * ui;
      }
      bool col_underflow = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(ktu[j] > kTiny)) col_underflow = true;
        else v[j] = b[j] / ktu[j];
      }
      if (col_underflow) {
        restabilize();
        continue;
      }
      const auto drift = [&](const std::vector<double>& s) {
        return std::any_of(s.begin(), s.end(), [&](double x) { return x > kAbsorbAbove || x < 1.0 / kAbsorbAbove; });
      };
      if (drift(u) || drift(v)) {
        absorb();
        sinkhorn_detail::build_kernel(cost, eps, f, g, kernel);
      }
    }
    return false;
  };

  if (options.epsilon_scaling) {
    const double target = eps;
    std::vector<double> stages;
    for (double e = default_epsilon(cost, 1.0); e > 2.0 * target; e *= 0.5) stages.push_back(e);
    for (double e : stages) {
      eps = e;
      std::size_t stage_iterations = 0;
      solve_stage(std::max(options.tolerance, 1e-4), stage_iterations);
      absorb();
    }
    eps = target;
  }
  std::size_t it = 0;
  const bool converged = solve_stage(options.tolerance, it);

  TransportPlan plan;
  plan.rows = m;
  plan.cols = n;

  absorb();
  sinkhorn_detail::build_kernel(cost, eps, f, g, kernel);  // kernel now holds gamma
  std::vector<double> row(m, 0.0), col(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = kernel[i * n + j];
      row[i] += x;
      col[j] += x;
      total += x * cost(i, j);
    }
  }
  double merr = 0.0;
  for (std::size_t i = 0; i < m; ++i) merr = std::max(merr, std::abs(row[i] - a[i]));
  for (std::size_t j = 0; j < n; ++j) merr = std::max(merr, std::abs(col[j] - b[j]));

  plan.cost = total;
  plan.iterations = it;
  plan.marginal_error = merr;
  plan.converged = converged && merr < options.tolerance;
  plan.row_potential = std::move(f);
  plan.col_potential = std::move(g);
  if (options.keep_coupling) plan.coupling = std::move(kernel);

  if (!plan.converged && merr > 100.0 * options.tolerance)
    throw ConvergenceError("sinkhorn did not converge in " + std::to_string(it) +
                               " iterations (marginal error " + std::to_string(merr) + ")",
                           std::move(plan));
  return plan;
}

// ---------------------------------------------------------------------------
// Exact OT (transportation simplex)

inline constexpr std::size_t kExactOtMaxCells = 4096;

namespace simplex_detail {

struct BasisCell {
  std::size_t i;
  std::size_t j;
};

}  // namespace simplex_detail

/// Exact minimizer of sum gamma_ij C_ij under the marginal constraints.
/// Nodes 0..m-1 are rows and m..m+n-1 are columns of the basis spanning tree.
inline TransportPlan exact_ot(const CostMatrix& cost, const DiscreteMeasure& source, const DiscreteMeasure& target) {
  validate_cost(cost);
  validate_measure(source, "source measure");
  validate_measure(target, "target measure");
  const std::size_t m = cost.rows(), n = cost.cols();
  if (m != source.size() || n != target.size())
    fail(ErrorKind::contract, "exact_ot: cost matrix shape does not match the measures");
  if (m * n > kExactOtMaxCells)
    fail(ErrorKind::contract, "exact_ot is an oracle for at most " + std::to_string(kExactOtMaxCells) + " cells");

  using simplex_detail::BasisCell;
  std::vector<double> x(m * n, 0.0);
  std::vector<char> basic(m * n, 0);
  std::vector<BasisCell> basis;
  basis.reserve(m + n - 1);

  // Northwest-corner start: a staircase of exactly m + n - 1 basic cells.
  {
    std::vector<double> supply = source.weights, demand = target.weights;
    std::size_t i = 0, j = 0;
    while (true) {
      const double q = (i == m - 1 && j == n - 1) ? std::max(0.0, std::min(supply[i], demand[j]))
                                                  : std::min(supply[i], demand[j]);
      x[i * n + j] = std::max(0.0, q);
      basic[i * n + j] = 1;
      basis.push_back({i, j});
      supply[i] -= q;
      demand[j] -= q;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1) ++j;
      else if (j == n - 1) ++i;
      else if (supply[i] <= demand[j]) ++i;
      else ++j;
    }
  }

  double cmax = 0.0;
  for (double c : cost.data()) cmax = std::max(cmax, c);
  const double tol = 1e-12 * std::max(1.0, cmax);

  std::vector<double> u(m), v(n);
  std::vector<std::vector<std::size_t>> adj(m + n);  // node -> indices into basis
  auto rebuild_adjacency = [&] {
    for (auto& a : adj) a.clear();
    for (std::size_t e = 0; e < basis.size(); ++e) {
      adj[basis[e].i].push_back(e);
      adj[m + basis[e].j].push_back(e);
    }
  };
  auto other_end = [&](std::size_t node, const BasisCell& c) { return node < m ? m + c.j : c.i; };

  const std::size_t max_pivots = 1'000'000;
  std::size_t pivots = 0;
  for (;; ++pivots) {
    if (pivots >= max_pivots) fail(ErrorKind::numeric, "exact_ot: pivot limit reached");
    rebuild_adjacency();

    // Duals: u_i + v_j = C_ij on the basis, u_0 = 0.
    std::vector<char> seen(m + n, 0);
    std::queue<std::size_t> bfs;
    u[0] = 0.0;
    seen[0] = 1;
    bfs.push(0);
    while (!bfs.empty()) {
      const std::size_t node = bfs.front();
      bfs.pop();
      for (std::size_t e : adj[node]) {
        const BasisCell& c = basis[e];
        const std::size_t nb = other_end(node, c);
        if (seen[nb]) continue;
        seen[nb] = 1;
        if (nb >= m) v[c.j] = cost(c.i, c.j) - u[c.i];
        else u[c.i] = cost(c.i, c.j) - v[c.j];
        bfs.push(nb);
      }
    }

    // Bland: first cell (row-major) with a negative reduced cost enters.
    std::size_t enter = m * n;
    for (std::size_t k = 0; k < m * n; ++k) {
      if (basic[k]) continue;
      if (cost(k / n, k % n) - u[k / n] - v[k % n] < -tol) {
        enter = k;
        break;
      }
    }
    if (enter == m * n) break;
    const std::size_t ei = enter / n, ej = enter % n;

    // Tree path from row ei to column ej closes the pivot cycle.
    std::vector<std::size_t> parent_edge(m + n, basis.size());
    std::vector<char> visited(m + n, 0);
    std::queue<std::size_t> q;
    visited[ei] = 1;
    q.push(ei);
    while (!q.empty() && !visited[m + ej]) {
      const std::size_t node = q.front();
      q.pop();
      for (std::size_t e : adj[node]) {
        const std::size_t nb = other_end(node, basis[e]);
        if (visited[nb]) continue;
        visited[nb] = 1;
        parent_edge[nb] = e;
        q.push(nb);
      }
    }
    std::vector<std::size_t> path;  // edges from column ej back to row ei
    for (std::size_t node = m + ej; node != ei;) {
      const std::size_t e = parent_edge[node];
      path.push_back(e);
      node = other_end(node, basis[e]);
    }
    std::reverse(path.begin(), path.end());  // now starts at row ei

    // Edges at odd positions along the cycle (0-based even in `path`) lose theta.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = basis.size();
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const BasisCell& c = basis[path[p]];
      const double val = x[c.i * n + c.j];
      const std::size_t key = c.i * n + c.j;
      if (val < theta || (val == theta && key < basis[leave].i * n + basis[leave].j)) {
        theta = val;
        leave = path[p];
      }
    }
    for (std::size_t p = 0; p < path.size(); ++p) {
      const BasisCell& c = basis[path[p]];
      double& val = x[c.i * n + c.j];
      val = (p % 2 == 0) ? std::max(0.0, val - theta) : val + theta;
    }
    x[enter] = theta;
    const BasisCell out = basis[leave];
    x[out.i * n + out.j] = 0.0;
    basic[out.i * n + out.j] = 0;
    basic[enter] = 1;
    basis[leave] = {ei, ej};
  }

  TransportPlan plan;
  plan.rows = m;
  plan.cols = n;
  plan.coupling = std::move(x);
  plan.iterations = pivots;
  plan.row_potential = u;
  plan.col_potential = v;
  std::vector<double> row(m, 0.0), col(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double val = plan.coupling[i * n + j];
      row[i] += val;
      col[j] += val;
      plan.cost += val * cost(i, j);
    }
  }
  for (std::size_t i = 0; i < m; ++i) plan.marginal_error = std::max(plan.marginal_error, std::abs(row[i] - source.weights[i]));
  for (std::size_t j = 0; j < n; ++j) plan.marginal_error = std::max(plan.marginal_error, std::abs(col[j] - target.weights[j]));
  return plan;
}

}  // namespace gsrobust
