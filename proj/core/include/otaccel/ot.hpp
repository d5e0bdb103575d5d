#pragma once

#include <cstdint>

#include "otaccel/core_math.hpp"
#include "otaccel/pdaam.hpp"

namespace otaccel {

// Dual variables of the softmax dual phi(u,v), after the change of
// variables that folds the 1/gamma scaling into the kernel exponent.
struct OTDualPoint {
    Vector u;
    Vector v;
};

class TransportPlan {
public:
    explicit TransportPlan(Matrix plan, bool exact_marginals = false);

    const Matrix& matrix() const { return plan_; }
    Eigen::Index size() const { return plan_.rows(); }
    // set only by round_to_polytope
    bool exact_marginals() const { return exact_marginals_; }

    Vector row_marginals() const { return plan_.rowwise().sum(); }
    Vector col_marginals() const { return plan_.colwise().sum().transpose(); }

private:
    Matrix plan_;
    bool exact_marginals_;
};

class EntropicOTProblem {
public:
    EntropicOTProblem(CostMatrix cost, double gamma, Histogram r, Histogram c);

    const CostMatrix& cost() const { return cost_; }
    double gamma() const { return gamma_; }
    const Histogram& row_marginal() const { return r_; }
    const Histogram& col_marginal() const { return c_; }
    const LogKernel& kernel() const { return kernel_; }
    Eigen::Index size() const { return cost_.size(); }

private:
    CostMatrix cost_;
    double gamma_;
    Histogram r_;
    Histogram c_;
    LogKernel kernel_;
};

// phi(u,v) = gamma (ln 1^T B(u,v) 1 - <u,r> - <v,c>)
double ot_dual_value(const EntropicOTProblem& prob, const OTDualPoint& p);

// g_u = gamma (B1/Sigma - r), g_v = gamma (B^T 1/Sigma - c)
std::pair<Vector, Vector> ot_dual_gradient(const EntropicOTProblem& prob,
                                           const OTDualPoint& p);

// Exact block minimizers of phi: u' = u + ln r - ln(B(u,v)1) and the
// column analogue. Require strictly positive marginals.
OTDualPoint sinkhorn_u_update(const EntropicOTProblem& prob, const OTDualPoint& p);
OTDualPoint sinkhorn_v_update(const EntropicOTProblem& prob, const OTDualPoint& p);

// x(u,v) = B(u,v) / (1^T B(u,v) 1)
TransportPlan primal_from_dual(const EntropicOTProblem& prob, const OTDualPoint& p);

// <C,X> + gamma <X, ln X>, with 0 ln 0 = 0
double entropic_primal_value(const EntropicOTProblem& prob, const Matrix& plan);

struct SinkhornStop {
    std::int64_t max_sweeps = 100000;
    double marginal_l1_tol = 1e-10;  // ||X1-r||_1 + ||X^T 1-c||_1
};

struct SinkhornResult {
    OTDualPoint point;
    TransportPlan plan;
    ConvergenceTrace trace;
};

// Classical Sinkhorn: alternate exact u- and v-minimization (one sweep per
// recorded iteration).
SinkhornResult run_sinkhorn(const EntropicOTProblem& prob, const SinkhornStop& stop);

// Row/column scaling plus a rank-one correction; output is exactly in
// U(r,c). Input must have total mass 1.
TransportPlan round_to_polytope(const TransportPlan& plan, const Histogram& r,
                                const Histogram& c);

// sqrt(N/2) (||C||_inf - (gamma/2) ln min{r_i, c_j}): bound on the distance
// from the all-zeros start to a dual solution, in the pre-change-of-variables
// coordinates the accelerated run uses.
double dual_radius_bound(const EntropicOTProblem& prob);

// The entropic OT dual as a linearly constrained problem. Dual points are
// the 2N-dimensional scaled coordinates delta = -gamma (u, v), in which the
// gradient is b - A x(lambda), the smoothness constant is at most 2/gamma
// and dual_radius_bound bounds the distance to a solution from delta = 0.
class OTDualProblem final : public LinearlyConstrainedProblem {
public:
    explicit OTDualProblem(const EntropicOTProblem& prob);

    const BlockObjective& dual() const override { return objective_; }
    Vector primal_from_dual(const Vector& lambda) const override;
    double primal_value(const Vector& x) const override;
    Vector constraint_residual(const Vector& x) const override;

    const EntropicOTProblem& problem() const { return prob_; }
    OTDualPoint to_dual_point(const Vector& lambda) const;
    Vector from_dual_point(const OTDualPoint& p) const;
    Vector zero_point() const { return Vector::Zero(2 * prob_.size()); }

private:
    class Objective final : public BlockObjective {
    public:
        explicit Objective(const OTDualProblem& owner) : owner_(owner) {}
        int num_blocks() const override { return 2; }
        Eigen::Index dimension() const override;
        double value(const Vector& x) const override;
        Vector gradient(const Vector& x) const override;
        double block_gradient_sqnorm(const Vector& x, int block) const override;
        Vector block_minimize(const Vector& x, int block) const override;

    private:
        const OTDualProblem& owner_;
    };

    const EntropicOTProblem& prob_;
    Objective objective_{*this};
};

// One adaptive primal-dual step where the block minimization is the
// closed-form Sinkhorn update.
inline StepReport accelerated_sinkhorn_step(const OTDualProblem& prob,
                                            PrimalDualState& state) {
    return pdaam_step(prob, state, Variant::adaptive);
}

struct AcceleratedSinkhornResult {
    OTDualPoint point;
    TransportPlan plan;    // primal average x_hat
    ConvergenceTrace trace;
};

AcceleratedSinkhornResult run_accelerated_sinkhorn(const EntropicOTProblem& prob,
                                                   const StoppingRule& stop,
                                                   double l0 = 1.0);

struct ApproxOTResult {
    TransportPlan plan;
    double cost = 0.0;
    ConvergenceTrace trace;
    std::int64_t iterations = 0;
};

// Unregularized OT to additive accuracy eps: gamma = eps/(4 ln N),
// eps' = eps/(8 ||C||_inf), marginals smoothed, accelerated Sinkhorn with
// rounding-based stopping. The returned plan is exactly feasible for the
// original (r, c).
ApproxOTResult approximate_ot(const CostMatrix& cost, const Histogram& r,
                              const Histogram& c, double eps,
                              std::int64_t max_iterations = 100000, double l0 = 1.0);

}  // namespace otaccel
