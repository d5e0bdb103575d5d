#pragma once

#include <functional>

#include "otaccel/core_math.hpp"
#include "otaccel/ot.hpp"

namespace otaccel {

struct ExactOTResult {
    double optimal_cost = 0.0;
    Matrix optimal_plan;  // a vertex of U(r,c)
};

// Exact unregularized OT for N <= 5 by enumerating the vertices of U(r,c):
// every vertex is supported on a spanning tree of the complete bipartite
// graph; enumerate all trees, solve each by leaf elimination, keep the
// cheapest nonnegative solution.
ExactOTResult exact_ot_bruteforce(const CostMatrix& cost, const Histogram& r,
                                  const Histogram& c);

// Long-run Sinkhorn fixed point: successive dual values within 1e-14 and
// marginal error below 1e-12. Serves as the regularized-optimum oracle.
OTDualPoint entropic_reference(const EntropicOTProblem& prob);

// Central differences, one coordinate at a time.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x, double h = 1e-6);

}  // namespace otaccel
