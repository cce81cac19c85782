// Copyright 2026 The wdhd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wdhd/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace wdhd {

namespace {

using Index = Eigen::Index;

struct Arc {
  Index row;
  Index col;
  double flow = 0.0;
};

// Transportation simplex over a spanning-tree basis. Nodes 0..m-1 are rows,
// m..m+n-1 are columns. Every basic solution is kept nondegenerate by
// perturbing the marginals (a_i += delta, b_last += m * delta); exact flows
// for the true marginals are recovered from the final basis.
class TransportSimplex {
 public:
  explicit TransportSimplex(const CostMatrix& cost)
      : cost_(cost), m_(cost.rows()), n_(cost.cols()), nodes_(m_ + n_) {
    const double delta = 1.0 / (4.0 * double(m_) * double(m_) * double(n_));
    supply_.assign(m_, 1.0 / double(m_) + delta);
    demand_.assign(n_, 1.0 / double(n_));
    demand_.back() += double(m_) * delta;
    const double scale = std::max(1.0, cost.maxCoeff());
    tolerance_ = 64.0 * std::numeric_limits<double>::epsilon() * double(nodes_) * scale;
    basic_.assign(m_ * n_, -1);
  }

  TransportPlan solve() {
    vogel_start();
    recompute_flows(supply_, demand_);
    const int cap = 50 * static_cast<int>(m_ + n_);
    int pivots = 0;
    for (;;) {
      compute_potentials();
      Index enter_row = -1, enter_col = -1;
      // Bland: lowest-index improving cell enters.
      for (Index i = 0; i < m_ && enter_row < 0; ++i) {
        for (Index j = 0; j < n_; ++j) {
          if (basic_[i * n_ + j] >= 0) continue;
          if (cost_(i, j) - u_[i] - v_[j] < -tolerance_) {
            enter_row = i;
            enter_col = j;
            break;
          }
        }
      }
      if (enter_row < 0) break;
      if (++pivots > cap)
        throw SolverError("transportation simplex exceeded " + std::to_string(cap) + " pivots");
      pivot(enter_row, enter_col);
    }

    std::vector<double> a(m_, 1.0 / double(m_)), b(n_, 1.0 / double(n_));
    recompute_flows(a, b);

    TransportPlan out;
    out.plan = Eigen::MatrixXd::Zero(m_, n_);
    out.row_marginals = Eigen::VectorXd::Constant(m_, 1.0 / double(m_));
    out.col_marginals = Eigen::VectorXd::Constant(n_, 1.0 / double(n_));
    out.pivots = pivots;
    double objective = 0.0;
    for (auto& arc : arcs_) {
      if (arc.flow < -1e-9) throw SolverError("negative flow in extracted basis");
      arc.flow = std::max(arc.flow, 0.0);
      out.plan(arc.row, arc.col) = arc.flow;
      objective += arc.flow * cost_(arc.row, arc.col);
      out.basis.emplace_back(arc.row, arc.col);
    }
    out.objective = objective;
    return out;
  }

 private:
  void add_arc(Index i, Index j) {
    basic_[i * n_ + j] = static_cast<int>(arcs_.size());
    arcs_.push_back({i, j, 0.0});
  }

  // Vogel's approximation: repeatedly allocate on the line with the largest
  // regret. Each allocation retires exactly one line (the last retires two),
  // which yields m + n - 1 basic cells forming a spanning tree.
  void vogel_start() {
    std::vector<double> s = supply_, d = demand_;
    std::vector<char> row_live(m_, 1), col_live(n_, 1);
    Index rows_left = m_, cols_left = n_;
    arcs_.reserve(m_ + n_ - 1);

    auto regret = [](double best, double second) {
      return second == std::numeric_limits<double>::infinity() ? best : second - best;
    };

    while (rows_left > 0 && cols_left > 0) {
      double top = -1.0;
      bool top_is_row = true;
      Index top_line = -1, top_cell = -1;
      for (Index i = 0; i < m_; ++i) {
        if (!row_live[i]) continue;
        double best = std::numeric_limits<double>::infinity(), second = best;
        Index arg = -1;
        for (Index j = 0; j < n_; ++j) {
          if (!col_live[j]) continue;
          const double c = cost_(i, j);
          if (c < best) {
            second = best;
            best = c;
            arg = j;
          } else if (c < second) {
            second = c;
          }
        }
        const double r = regret(best, second);
        if (r > top) {
          top = r;
          top_is_row = true;
          top_line = i;
          top_cell = arg;
        }
      }
      for (Index j = 0; j < n_; ++j) {
        if (!col_live[j]) continue;
        double best = std::numeric_limits<double>::infinity(), second = best;
        Index arg = -1;
        for (Index i = 0; i < m_; ++i) {
          if (!row_live[i]) continue;
          const double c = cost_(i, j);
          if (c < best) {
            second = best;
            best = c;
            arg = i;
          } else if (c < second) {
            second = c;
          }
        }
        const double r = regret(best, second);
        if (r > top) {
          top = r;
          top_is_row = false;
          top_line = j;
          top_cell = arg;
        }
      }
      const Index i = top_is_row ? top_line : top_cell;
      const Index j = top_is_row ? top_cell : top_line;
      add_arc(i, j);

      bool retire_row;
      if (rows_left == 1 && cols_left == 1) {
        row_live[i] = 0;
        col_live[j] = 0;
        --rows_left;
        --cols_left;
        continue;
      } else if (rows_left == 1) {
        retire_row = false;
      } else if (cols_left == 1) {
        retire_row = true;
      } else {
        retire_row = s[i] <= d[j];
      }
      const double x = retire_row ? s[i] : d[j];
      s[i] -= x;
      d[j] -= x;
      if (retire_row) {
        row_live[i] = 0;
        s[i] = 0.0;
        --rows_left;
      } else {
        col_live[j] = 0;
        d[j] = 0.0;
        --cols_left;
      }
    }
    if (static_cast<Index>(arcs_.size()) != m_ + n_ - 1)
      throw SolverError("initial basis has wrong size");
  }

  void build_adjacency() {
    adjacency_.assign(nodes_, {});
    for (int k = 0; k < static_cast<int>(arcs_.size()); ++k) {
      adjacency_[arcs_[k].row].push_back(k);
      adjacency_[m_ + arcs_[k].col].push_back(k);
    }
  }

  Index other_end(const Arc& arc, Index node) const {
    return node < m_ ? m_ + arc.col : arc.row;
  }

  // Leaf elimination: a leaf's single arc carries its whole residual mass.
  void recompute_flows(const std::vector<double>& a, const std::vector<double>& b) {
    build_adjacency();
    std::vector<double> residual(nodes_);
    for (Index i = 0; i < m_; ++i) residual[i] = a[i];
    for (Index j = 0; j < n_; ++j) residual[m_ + j] = b[j];
    std::vector<int> degree(nodes_);
    for (Index x = 0; x < nodes_; ++x) degree[x] = static_cast<int>(adjacency_[x].size());
    std::vector<char> done(arcs_.size(), 0);
    std::vector<Index> leaves;
    for (Index x = 0; x < nodes_; ++x)
      if (degree[x] == 1) leaves.push_back(x);
    std::size_t settled = 0;
    while (!leaves.empty()) {
      const Index x = leaves.back();
      leaves.pop_back();
      if (degree[x] != 1) continue;
      int k = -1;
      for (int cand : adjacency_[x])
        if (!done[cand]) k = cand;
      Arc& arc = arcs_[k];
      const Index y = other_end(arc, x);
      arc.flow = residual[x];
      residual[y] -= residual[x];
      residual[x] = 0.0;
      done[k] = 1;
      ++settled;
      --degree[x];
      if (--degree[y] == 1) leaves.push_back(y);
    }
    if (settled != arcs_.size()) throw SolverError("basis is not a spanning tree");
  }

  void compute_potentials() {
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen(nodes_, 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Index x = stack.back();
      stack.pop_back();
      for (int k : adjacency_[x]) {
        const Arc& arc = arcs_[k];
        const Index y = other_end(arc, x);
        if (seen[y]) continue;
        seen[y] = 1;
        if (y < m_)
          u_[arc.row] = cost_(arc.row, arc.col) - v_[arc.col];
        else
          v_[arc.col] = cost_(arc.row, arc.col) - u_[arc.row];
        stack.push_back(y);
      }
    }
  }

  void pivot(Index enter_row, Index enter_col) {
    // Tree path from column node back to the entering row.
    std::vector<int> parent_arc(nodes_, -1);
    std::vector<char> seen(nodes_, 0);
    std::vector<Index> stack{enter_row};
    seen[enter_row] = 1;
    const Index target = m_ + enter_col;
    while (!stack.empty() && !seen[target]) {
      const Index x = stack.back();
      stack.pop_back();
      for (int k : adjacency_[x]) {
        const Index y = other_end(arcs_[k], x);
        if (seen[y]) continue;
        seen[y] = 1;
        parent_arc[y] = k;
        stack.push_back(y);
      }
    }
    if (!seen[target]) throw SolverError("basis is disconnected");

    // Arcs at odd positions along the path (starting next to the entering
    // column) lose theta, even positions gain it.
    std::vector<int> path;
    for (Index x = target; x != enter_row;) {
      const int k = parent_arc[x];
      path.push_back(k);
      x = other_end(arcs_[k], x);
    }
    int leaving = -1;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const Arc& arc = arcs_[path[p]];
      const bool better =
          leaving < 0 || arc.flow < theta ||
          (arc.flow == theta &&
           arc.row * n_ + arc.col < arcs_[leaving].row * n_ + arcs_[leaving].col);
      if (better) {
        theta = arc.flow;
        leaving = path[p];
      }
    }

    Arc& out = arcs_[leaving];
    basic_[out.row * n_ + out.col] = -1;
    out = {enter_row, enter_col, theta};
    basic_[enter_row * n_ + enter_col] = leaving;
    recompute_flows(supply_, demand_);
  }

  const CostMatrix& cost_;
  Index m_, n_, nodes_;
  std::vector<double> supply_, demand_;
  double tolerance_ = 0.0;
  std::vector<Arc> arcs_;
  std::vector<int> basic_;  // cell -> arc index or -1
  std::vector<std::vector<int>> adjacency_;
  std::vector<double> u_, v_;
};

}  // namespace

TransportPlan solve_emd2(const CostMatrix& cost) {
  if (cost.rows() < 1 || cost.cols() < 1) throw InvalidArgument("solve_emd2: empty cost matrix");
  if (!cost.allFinite()) throw InvalidArgument("solve_emd2: non-finite cost entry");
  if ((cost.array() < 0.0).any()) throw InvalidArgument("solve_emd2: negative cost entry");
  return TransportSimplex(cost).solve();
}

double w2_distance(const PointCloud& u, const PointCloud& v) {
  if (u.rows() == 0 || v.rows() == 0) throw EmptySupport();
  const double emd2 = solve_emd2(cost_matrix(u, v)).objective;
  return std::sqrt(std::max(emd2, 0.0));
}

}  // namespace wdhd
