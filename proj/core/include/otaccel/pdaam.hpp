#pragma once

#include "otaccel/aam.hpp"

namespace otaccel {

// min f(x) over x in Q subject to A x = b, accessed through its dual:
// dual() is the (block-structured) dual objective the solver runs on, and
// primal_from_dual recovers the inner maximizer x(lambda). For consistency
// the dual gradient must equal -(A x(lambda) - b) in the dual coordinates.
class LinearlyConstrainedProblem {
public:
    virtual ~LinearlyConstrainedProblem() = default;

    virtual const BlockObjective& dual() const = 0;
    virtual Vector primal_from_dual(const Vector& lambda) const = 0;
    virtual double primal_value(const Vector& x) const = 0;
    // A x - b
    virtual Vector constraint_residual(const Vector& x) const = 0;
};

struct PrimalDualState {
    SolverState inner;  // inner.x = eta (dual iterate), inner.v = zeta (momentum)
    Vector x_hat;       // weighted primal average; empty before the first step

    static PrimalDualState init(Vector lambda0, double l0 = 1.0);
    bool has_average() const { return x_hat.size() > 0; }
};

struct Certificates {
    double feasibility = 0.0;  // ||A x_hat - b||_2
    double gap = 0.0;          // f(x_hat) + phi(eta), signed
};

// One accelerated step on the dual plus the primal average update
// x_hat <- (a x(lambda) + A_prev x_hat) / A_new. The two averaging rules
// coincide because A = a^2 L holds in the adaptive variant.
StepReport pdaam_step(const LinearlyConstrainedProblem& prob,
                      PrimalDualState& state, Variant variant);

// Adaptive step with the block minimization replaced by a full gradient
// step eta+ = lambda - grad phi(lambda)/L; same backtracking and averaging.
StepReport apdagd_baseline_step(const LinearlyConstrainedProblem& prob,
                                PrimalDualState& state);

Certificates certificates(const LinearlyConstrainedProblem& prob,
                          const PrimalDualState& state);

struct PdaamResult {
    Vector eta;
    Vector x_hat;
    ConvergenceTrace trace;
    bool stationary = false;
};

enum class PdMethod { pdaam, apdagd_baseline };

PdaamResult run_pdaam(const LinearlyConstrainedProblem& prob, Vector lambda0,
                      Variant variant, const StoppingRule& stop, double l0 = 1.0,
                      PdMethod method = PdMethod::pdaam);

}  // namespace otaccel
