#include "otaccel/oracle.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace otaccel {

namespace {

// Union-find over the 2N bipartite nodes, small enough to copy freely.
struct Dsu {
    std::vector<int> parent;
    explicit Dsu(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a); b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

struct TreeSolver {
    int n;
    const Matrix& cost;
    const Vector& r;
    const Vector& c;
    double best_cost = std::numeric_limits<double>::infinity();
    Matrix best_plan;

    // Solve the tree system by leaf elimination; reject negative solutions.
    void try_tree(const std::vector<std::pair<int, int>>& edges) {
        const int nodes = 2 * n;
        std::vector<std::vector<int>> incident(nodes);
        for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
            incident[edges[e].first].push_back(e);
            incident[edges[e].second + n].push_back(e);
        }
        std::vector<double> residual(nodes);
        for (int i = 0; i < n; ++i) residual[i] = r[i];
        for (int j = 0; j < n; ++j) residual[n + j] = c[j];
        std::vector<int> degree(nodes);
        for (int v = 0; v < nodes; ++v) degree[v] = static_cast<int>(incident[v].size());
        std::vector<bool> edge_done(edges.size(), false);
        std::vector<double> value(edges.size(), 0.0);
        std::vector<int> stack;
        for (int v = 0; v < nodes; ++v)
            if (degree[v] == 1) stack.push_back(v);
        int solved = 0;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            if (degree[v] != 1) continue;
            int e = -1;
            for (int cand : incident[v])
                if (!edge_done[cand]) { e = cand; break; }
            if (e < 0) continue;
            value[e] = residual[v];
            if (value[e] < -1e-11) return;  // infeasible vertex
            edge_done[e] = true;
            ++solved;
            const int other = edges[e].first == v ? edges[e].second + n : edges[e].first;
            residual[other] -= value[e];
            residual[v] = 0.0;
            if (--degree[other] == 1) stack.push_back(other);
            --degree[v];
        }
        if (solved != static_cast<int>(edges.size())) return;
        double total = 0.0;
        for (int e = 0; e < static_cast<int>(edges.size()); ++e)
            total += cost(edges[e].first, edges[e].second) * std::max(value[e], 0.0);
        if (total < best_cost) {
            best_cost = total;
            best_plan = Matrix::Zero(n, n);
            for (int e = 0; e < static_cast<int>(edges.size()); ++e)
                best_plan(edges[e].first, edges[e].second) = std::max(value[e], 0.0);
        }
    }

    void enumerate(int edge_idx, std::vector<std::pair<int, int>>& chosen, const Dsu& dsu) {
        const int target = 2 * n - 1;
        if (static_cast<int>(chosen.size()) == target) {
            try_tree(chosen);
            return;
        }
        const int total_edges = n * n;
        if (total_edges - edge_idx < target - static_cast<int>(chosen.size())) return;
        const int i = edge_idx / n;
        const int j = edge_idx % n;
        Dsu with = dsu;
        if (with.unite(i, j + n)) {
            chosen.emplace_back(i, j);
            enumerate(edge_idx + 1, chosen, with);
            chosen.pop_back();
        }
        enumerate(edge_idx + 1, chosen, dsu);
    }
};

}  // namespace

ExactOTResult exact_ot_bruteforce(const CostMatrix& cost, const Histogram& r,
                                  const Histogram& c) {
    const int n = static_cast<int>(cost.size());
    if (n > 5)
        throw std::invalid_argument("exact_ot_bruteforce: N <= 5 only");
    TreeSolver solver{n, cost.entries(), r.weights(), c.weights()};
    std::vector<std::pair<int, int>> chosen;
    solver.enumerate(0, chosen, Dsu(2 * n));
    if (!std::isfinite(solver.best_cost))
        throw std::runtime_error("exact_ot_bruteforce: no feasible vertex found");
    return {solver.best_cost, std::move(solver.best_plan)};
}

OTDualPoint entropic_reference(const EntropicOTProblem& prob) {
    OTDualPoint p{Vector::Zero(prob.size()), Vector::Zero(prob.size())};
    double prev = ot_dual_value(prob, p);
    for (std::int64_t k = 0; k < 1000000; ++k) {
        p = sinkhorn_u_update(prob, p);
        p = sinkhorn_v_update(prob, p);
        const double value = ot_dual_value(prob, p);
        const TransportPlan plan = primal_from_dual(prob, p);
        const double err =
            (plan.row_marginals() - prob.row_marginal().weights()).lpNorm<1>() +
            (plan.col_marginals() - prob.col_marginal().weights()).lpNorm<1>();
        if (std::abs(prev - value) < 1e-14 && err < 1e-12) return p;
        prev = value;
    }
    throw std::runtime_error("entropic_reference: 1e6 sweep cap exceeded");
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: h > 0");
    Vector g(x.size());
    Vector probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

}  // namespace otaccel
