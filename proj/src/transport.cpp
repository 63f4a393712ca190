#include "wkm/transport.hpp"

#include "wkm/error.hpp"
#include "wkm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

namespace wkm {

namespace {

constexpr double kMassScale = 1099511627776.0;  // 2^40 integer units per unit mass

// Largest-remainder rounding of nonnegative weights (summing to `total`) onto
// integers that sum to exactly kMassScale.
std::vector<std::int64_t> to_integer_masses(std::span<const double> w, double total) {
  std::vector<std::int64_t> out(w.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  remainders.reserve(w.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double scaled = w[i] / total * kMassScale;
    const double whole = std::floor(scaled);
    out[i] = static_cast<std::int64_t>(whole);
    assigned += out[i];
    remainders.emplace_back(scaled - whole, i);
  }
  auto missing = static_cast<std::int64_t>(kMassScale) - assigned;
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t r = 0; missing > 0 && r < remainders.size(); ++r, --missing) ++out[remainders[r].second];
  for (std::size_t r = 0; missing < 0 && r < remainders.size(); ++r) {
    auto& v = out[remainders[remainders.size() - 1 - r].second];
    if (v > 0) { --v; ++missing; }
  }
  return out;
}

// Transportation simplex on a spanning-tree basis. Supplies and demands are
// integers perturbed so that every basic solution is nondegenerate; each pivot
// then strictly lowers the objective and the method terminates.
class TransportSimplex {
 public:
  TransportSimplex(std::vector<std::int64_t> supply, std::vector<std::int64_t> demand,
                   std::vector<double> cost)
      : m_(supply.size()), n_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
        cost_(std::move(cost)) {}

  void solve() {
    initial_basis();
    const std::size_t nodes = m_ + n_;
    potential_.assign(nodes, 0.0);
    parent_cell_.assign(nodes, kNone);
    depth_.assign(nodes, 0);
    order_.reserve(nodes);

    double max_cost = 0.0;
    for (double c : cost_) max_cost = std::max(max_cost, std::abs(c));
    const double eps = 1e-12 * std::max(max_cost, 1e-300);
    const std::size_t cells = m_ * n_;
    const std::size_t block = std::max<std::size_t>(64, static_cast<std::size_t>(std::sqrt(static_cast<double>(cells))));
    std::size_t cursor = 0;

    for (;;) {
      compute_tree();
      // Block pricing: take the most negative reduced cost within the first block that has one.
      std::size_t best_cell = kNone;
      double best_rc = -eps;
      std::size_t scanned = 0;
      while (scanned < cells) {
        const std::size_t stop = std::min(cells, scanned + block);
        for (; scanned < stop; ++scanned) {
          const std::size_t c = cursor;
          cursor = cursor + 1 == cells ? 0 : cursor + 1;
          const std::size_t i = c / n_, j = c % n_;
          const double rc = cost_[c] - potential_[i] - potential_[m_ + j];
          if (rc < best_rc) {
            best_rc = rc;
            best_cell = c;
          }
        }
        if (best_cell != kNone) break;
      }
      if (best_cell == kNone) break;
      pivot(best_cell / n_, best_cell % n_);
      ++pivots_;
    }
  }

  // Flow per dense cell, in integer units.
  std::vector<std::int64_t> dense_flow() const {
    std::vector<std::int64_t> out(m_ * n_, 0);
    for (const auto& b : basis_) out[b.row * n_ + b.col] = b.flow;
    return out;
  }

  std::size_t pivots() const { return pivots_; }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Basic {
    std::size_t row, col;
    std::int64_t flow;
  };

  std::size_t other_end(const Basic& b, std::size_t node) const {
    return node < m_ ? m_ + b.col : b.row;
  }

  void link(std::size_t id) {
    adjacency_[basis_[id].row].push_back(id);
    adjacency_[m_ + basis_[id].col].push_back(id);
  }
  void unlink(std::size_t id) {
    for (std::size_t node : {basis_[id].row, m_ + basis_[id].col}) {
      auto& adj = adjacency_[node];
      adj.erase(std::find(adj.begin(), adj.end(), id));
    }
  }

  // North-west corner rule.
  void initial_basis() {
    adjacency_.assign(m_ + n_, {});
    std::vector<std::int64_t> a = supply_, b = demand_;
    std::size_t i = 0, j = 0;
    while (i < m_ && j < n_) {
      const std::int64_t f = std::min(a[i], b[j]);
      basis_.push_back({i, j, f});
      link(basis_.size() - 1);
      a[i] -= f;
      b[j] -= f;
      if (a[i] == 0 && i + 1 < m_) {
        ++i;
      } else if (b[j] == 0 && j + 1 < n_) {
        ++j;
      } else if (i + 1 == m_ && j + 1 == n_) {
        break;
      } else if (a[i] == 0) {
        ++i;
      } else {
        ++j;
      }
    }
    if (basis_.size() != m_ + n_ - 1) throw Error(Errc::domain, "transport basis is not a spanning tree");
  }

  // Potentials with u_0 = 0 and u_i + v_j = c_ij on every basic cell, plus
  // parent links and depths for cycle search.
  void compute_tree() {
    std::fill(parent_cell_.begin(), parent_cell_.end(), kNone);
    order_.clear();
    order_.push_back(0);
    depth_[0] = 0;
    potential_[0] = 0.0;
    std::vector<bool>& seen = seen_;
    seen.assign(m_ + n_, false);
    seen[0] = true;
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const std::size_t node = order_[head];
      for (std::size_t id : adjacency_[node]) {
        const Basic& b = basis_[id];
        const std::size_t next = other_end(b, node);
        if (seen[next]) continue;
        seen[next] = true;
        parent_cell_[next] = id;
        depth_[next] = depth_[node] + 1;
        potential_[next] = cost_[b.row * n_ + b.col] - potential_[node];
        order_.push_back(next);
      }
    }
  }

  std::size_t parent_node(std::size_t node) const { return other_end(basis_[parent_cell_[node]], node); }

  void pivot(std::size_t row, std::size_t col) {
    // Tree path from the column node up to the row node. Edges alternate
    // -, +, -, ... starting from the column side; the entering cell is +.
    std::vector<std::size_t>& up_col = path_a_;
    std::vector<std::size_t>& up_row = path_b_;
    up_col.clear();
    up_row.clear();
    std::size_t x = m_ + col, y = row;
    while (depth_[x] > depth_[y]) { up_col.push_back(parent_cell_[x]); x = parent_node(x); }
    while (depth_[y] > depth_[x]) { up_row.push_back(parent_cell_[y]); y = parent_node(y); }
    while (x != y) {
      up_col.push_back(parent_cell_[x]);
      x = parent_node(x);
      up_row.push_back(parent_cell_[y]);
      y = parent_node(y);
    }
    std::vector<std::size_t>& path = path_c_;
    path.assign(up_col.begin(), up_col.end());
    path.insert(path.end(), up_row.rbegin(), up_row.rend());

    std::size_t leaving = kNone;
    std::int64_t theta = std::numeric_limits<std::int64_t>::max();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      if (basis_[path[k]].flow < theta) {
        theta = basis_[path[k]].flow;
        leaving = path[k];
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) basis_[path[k]].flow += (k % 2 == 0) ? -theta : theta;

    unlink(leaving);
    basis_[leaving] = {row, col, theta};
    link(leaving);
  }

  std::size_t m_, n_;
  std::vector<std::int64_t> supply_, demand_;
  std::vector<double> cost_;
  std::vector<Basic> basis_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<double> potential_;
  std::vector<std::size_t> parent_cell_;
  std::vector<int> depth_;
  std::vector<std::size_t> order_;
  std::vector<bool> seen_;
  std::vector<std::size_t> path_a_, path_b_, path_c_;
  std::size_t pivots_ = 0;
};

}  // namespace

FlowSolution solve_transport(std::span<const double> supplies, std::span<const double> demands,
                             std::span<const double> cost) {
  if (cost.size() != supplies.size() * demands.size()) throw Error(Errc::shape, "cost matrix shape mismatch");
  double total_a = 0.0, total_b = 0.0;
  for (double v : supplies) {
    if (!(v >= 0.0)) throw Error(Errc::domain, "negative or NaN supply");
    total_a += v;
  }
  for (double v : demands) {
    if (!(v >= 0.0)) throw Error(Errc::domain, "negative or NaN demand");
    total_b += v;
  }
  if (!(total_a > 0.0)) throw Error(Errc::unbalanced_input, "distributions carry no mass");
  if (std::abs(total_a - total_b) > 1e-9 * std::max(total_a, total_b)) {
    throw Error(Errc::unbalanced_input, "total masses differ: " + std::to_string(total_a) + " vs " +
                                            std::to_string(total_b));
  }

  const auto ia = to_integer_masses(supplies, total_a);
  const auto ib = to_integer_masses(demands, total_b);
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < ia.size(); ++i) if (ia[i] > 0) rows.push_back(i);
  for (std::size_t j = 0; j < ib.size(); ++j) if (ib[j] > 0) cols.push_back(j);

  // Perturbation: supplies a_i K + 1, last demand b_n K + m. Every basic flow of
  // the perturbed problem is K x + d with |d| <= m, so K > 2m lets the
  // unperturbed flow x be recovered exactly by rounding.
  const auto k = static_cast<std::int64_t>(2 * rows.size() + 2);
  std::vector<std::int64_t> a(rows.size()), b(cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) a[i] = ia[rows[i]] * k + 1;
  for (std::size_t j = 0; j < cols.size(); ++j) b[j] = ib[cols[j]] * k;
  b.back() += static_cast<std::int64_t>(rows.size());

  std::vector<double> sub_cost(rows.size() * cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) sub_cost[i * cols.size() + j] = cost[rows[i] * demands.size() + cols[j]];
  }

  TransportSimplex simplex(std::move(a), std::move(b), std::move(sub_cost));
  simplex.solve();
  const auto flow = simplex.dense_flow();

  FlowSolution out;
  out.flow.assign(cost.size(), 0.0);
  const double unit = total_a / kMassScale;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const std::int64_t f = (flow[i * cols.size() + j] + k / 2) / k;
      if (f == 0) continue;
      const std::size_t dense = rows[i] * demands.size() + cols[j];
      out.flow[dense] = static_cast<double>(f) * unit;
      out.cost += out.flow[dense] * cost[dense];
    }
  }
  return out;
}

namespace {

void check_oracle_input(const Image& a, const Image& b) {
  if (a.size() != b.size()) throw Error(Errc::shape, "images differ in size");
  if (a.empty()) throw Error(Errc::shape, "empty images");
  if (a.size() > kExactSizeCap) {
    throw Error(Errc::size_cap, "exact transport is capped at " + std::to_string(kExactSizeCap) + " pixels per side, got " +
                                    std::to_string(a.size()));
  }
  for (const Image* img : {&a, &b}) {
    for (double v : img->pixels()) {
      if (!(v >= 0.0)) throw Error(Errc::domain, "exact transport needs nonnegative pixels");
    }
  }
  const double ma = a.sum(), mb = b.sum();
  if (!(ma > 0.0) || !(mb > 0.0)) throw Error(Errc::unbalanced_input, "images carry no mass");
  if (std::abs(ma - mb) > 1e-9 * std::max(ma, mb)) {
    throw Error(Errc::unbalanced_input, "image masses differ: " + std::to_string(ma) + " vs " + std::to_string(mb));
  }
}

}  // namespace

TransportResult exact_wp(const Image& a, const Image& b, int p, double pixel_size) {
  if (p != 1 && p != 2) throw Error(Errc::invalid_argument, "p must be 1 or 2");
  check_oracle_input(a, b);
  const Image na = a.normalized(), nb = b.normalized();
  const std::size_t n = a.size();

  std::vector<std::size_t> src, dst;
  for (std::size_t i = 0; i < n * n; ++i) {
    if (na.pixels()[i] > 0.0) src.push_back(i);
    if (nb.pixels()[i] > 0.0) dst.push_back(i);
  }
  std::vector<double> supply(src.size()), demand(dst.size()), cost(src.size() * dst.size());
  for (std::size_t i = 0; i < src.size(); ++i) supply[i] = na.pixels()[src[i]];
  for (std::size_t j = 0; j < dst.size(); ++j) demand[j] = nb.pixels()[dst[j]];
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double ri = static_cast<double>(src[i] / n), ci = static_cast<double>(src[i] % n);
    for (std::size_t j = 0; j < dst.size(); ++j) {
      const double dr = (ri - static_cast<double>(dst[j] / n)) * pixel_size;
      const double dc = (ci - static_cast<double>(dst[j] % n)) * pixel_size;
      const double d2 = dr * dr + dc * dc;
      cost[i * dst.size() + j] = p == 1 ? std::sqrt(d2) : d2;
    }
  }

  const FlowSolution sol = solve_transport(supply, demand, cost);
  TransportResult result;
  result.plan.p = p;
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < dst.size(); ++j) {
      const double f = sol.flow[i * dst.size() + j];
      if (f <= 0.0) continue;
      result.plan.pairs.push_back({{static_cast<int>(src[i] / n), static_cast<int>(src[i] % n)},
                                   {static_cast<int>(dst[j] / n), static_cast<int>(dst[j] % n)},
                                   f});
    }
  }
  result.plan.cost = sol.cost;
  result.distance = sol.cost;
  return result;
}

double exact_w1_rotinv(const Image& a, const Image& b, int rotation_count, double pixel_size) {
  if (rotation_count < 1) throw Error(Errc::invalid_argument, "rotation_count must be at least 1");
  check_oracle_input(a, b);
  const RotationGrid grid(rotation_count);
  const double target_mass = a.sum();
  std::vector<double> values(static_cast<std::size_t>(rotation_count));

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < rotation_count; ++r) {
    Image rotated = rotate_image(b, grid.angle(r));
    const double mass = rotated.sum();
    if (!(mass > 0.0)) {
      values[static_cast<std::size_t>(r)] = std::numeric_limits<double>::infinity();
      continue;
    }
    for (double& v : rotated.pixels()) v *= target_mass / mass;
    values[static_cast<std::size_t>(r)] = exact_wp(a, rotated, 1, pixel_size).distance;
  }
  return *std::min_element(values.begin(), values.end());
}

}  // namespace wkm
