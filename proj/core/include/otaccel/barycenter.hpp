#pragma once

#include <cstdint>
#include <vector>

#include "otaccel/core_math.hpp"
#include "otaccel/ot.hpp"
#include "otaccel/pdaam.hpp"

namespace otaccel {

// Regularized barycenter of m measures. Dual points are stacked vectors of
// length 2mN: u_1..u_m then v_1..v_m, with the affine constraint
// sum_l w_l v_l = 0 maintained throughout.
class BarycenterProblem {
public:
    BarycenterProblem(std::vector<Histogram> measures, std::vector<CostMatrix> costs,
                      Vector weights, double gamma);

    int num_measures() const { return static_cast<int>(measures_.size()); }
    Eigen::Index support_size() const { return measures_[0].size(); }
    const Histogram& measure(int l) const { return measures_[l]; }
    const CostMatrix& cost(int l) const { return costs_[l]; }
    const LogKernel& kernel(int l) const { return kernels_[l]; }
    const Vector& weights() const { return weights_; }
    double gamma() const { return gamma_; }
    bool weights_renormalized() const { return weights_renormalized_; }

    Eigen::Index dual_dimension() const { return 2 * num_measures() * support_size(); }
    Vector zero_dual() const { return Vector::Zero(dual_dimension()); }

    // views into a stacked dual point
    auto u_block(const Vector& x, int l) const {
        return x.segment(l * support_size(), support_size());
    }
    auto v_block(const Vector& x, int l) const {
        return x.segment((num_measures() + l) * support_size(), support_size());
    }

private:
    std::vector<Histogram> measures_;
    std::vector<CostMatrix> costs_;
    Vector weights_;
    double gamma_;
    std::vector<LogKernel> kernels_;
    bool weights_renormalized_ = false;
};

// gamma sum_l w_l { ln(1^T B_l 1) - <u_l, p_l> } - m gamma
double wb_dual_value(const BarycenterProblem& prob, const Vector& point);

// Gradient with the v-part Euclidean-projected onto {sum_l w_l v_l = 0}.
Vector wb_dual_gradient(const BarycenterProblem& prob, const Vector& point);

// Subtract the weighted mean direction so that sum_l w_l v_l = 0.
void project_v_blocks(const BarycenterProblem& prob, Vector& point);

// sum_l w_l v_l, coordinatewise (constraint residual of a dual point)
Vector weighted_v_sum(const BarycenterProblem& prob, const Vector& point);

// Exact block minimizers: u_l' = u_l + ln p_l - ln(B_l 1);
// v_l' = v_l + sum_j w_j ln(B_j^T 1) - ln(B_l^T 1).
Vector ibp_u_update(const BarycenterProblem& prob, const Vector& point);
Vector ibp_v_update(const BarycenterProblem& prob, const Vector& point);

std::vector<TransportPlan> barycenter_plans(const BarycenterProblem& prob,
                                            const Vector& point);

// w-average of the plans' column marginals, renormalized.
Histogram barycenter_estimate(const std::vector<TransportPlan>& plans,
                              const Vector& weights);

// sum_l w_l ||q_l - q_bar||_1 + sum_l w_l ||row_l - p_l||_1
double barycenter_feasibility(const BarycenterProblem& prob,
                              const std::vector<TransportPlan>& plans);

struct IbpStop {
    std::int64_t max_sweeps = 100000;
    double feasibility_tol = 1e-10;
};

struct IbpResult {
    Vector point;
    std::vector<TransportPlan> plans;
    ConvergenceTrace trace;
};

// Classical iterative Bregman projections: alternate exact u- and
// v-minimization; the dual value is non-increasing.
IbpResult run_ibp(const BarycenterProblem& prob, const IbpStop& stop);

// The barycenter dual as a linearly constrained problem over the stacked
// (u, v) coordinates. Primal points are the m plans stacked (m N^2 values);
// the constraint residual stacks per-plan row errors and the deviation of
// each column marginal from their w-average.
class BarycenterDualProblem final : public LinearlyConstrainedProblem {
public:
    explicit BarycenterDualProblem(const BarycenterProblem& prob);

    const BlockObjective& dual() const override { return objective_; }
    Vector primal_from_dual(const Vector& lambda) const override;
    double primal_value(const Vector& x) const override;
    Vector constraint_residual(const Vector& x) const override;

    const BarycenterProblem& problem() const { return prob_; }
    std::vector<TransportPlan> unstack_plans(const Vector& x) const;

private:
    class Objective final : public BlockObjective {
    public:
        explicit Objective(const BarycenterDualProblem& owner) : owner_(owner) {}
        int num_blocks() const override { return 2; }
        Eigen::Index dimension() const override { return owner_.prob_.dual_dimension(); }
        double value(const Vector& x) const override;
        Vector gradient(const Vector& x) const override;
        double block_gradient_sqnorm(const Vector& x, int block) const override;
        Vector block_minimize(const Vector& x, int block) const override;

    private:
        const BarycenterDualProblem& owner_;
    };

    const BarycenterProblem& prob_;
    Objective objective_{*this};
};

inline StepReport accelerated_ibp_step(const BarycenterDualProblem& prob,
                                       PrimalDualState& state) {
    StepReport rep = pdaam_step(prob, state, Variant::adaptive);
    // momentum updates accumulate rounding drift off {sum_l w_l v_l = 0}
    project_v_blocks(prob.problem(), state.inner.v);
    return rep;
}

struct AcceleratedIbpResult {
    Vector point;
    std::vector<TransportPlan> plans;  // from the primal average
    ConvergenceTrace trace;
};

AcceleratedIbpResult run_accelerated_ibp(const BarycenterProblem& prob,
                                         const StoppingRule& stop, double l0 = 1.0);

}  // namespace otaccel
