#include "otaccel/pdaam.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace otaccel {

PrimalDualState PrimalDualState::init(Vector lambda0, double l0) {
    PrimalDualState s;
    s.inner = SolverState::init(std::move(lambda0), l0);
    return s;
}

namespace {

void update_average(const LinearlyConstrainedProblem& prob, PrimalDualState& state,
                    const StepReport& rep) {
    const Vector x_lambda = prob.primal_from_dual(rep.y);
    if (!state.has_average()) {
        state.x_hat = x_lambda;
        return;
    }
    const double a_new = state.inner.A;
    const double a_prev = a_new - rep.a;
    state.x_hat = (rep.a * x_lambda + a_prev * state.x_hat) / a_new;
}

}  // namespace

StepReport pdaam_step(const LinearlyConstrainedProblem& prob,
                      PrimalDualState& state, Variant variant) {
    StepReport rep = aam_step(prob.dual(), state.inner, variant);
    if (rep.stationary) {
        // at a stationary dual point x(eta) is the exact primal solution and
        // dominates the running average
        state.x_hat = prob.primal_from_dual(state.inner.x);
        return rep;
    }
    update_average(prob, state, rep);
    return rep;
}

StepReport apdagd_baseline_step(const LinearlyConstrainedProblem& prob,
                                PrimalDualState& state) {
    const BlockObjective& phi = prob.dual();
    SolverState& s = state.inner;
    StepReport rep;
    double L = s.L / 2.0;
    Vector lambda;
    double f_lambda = 0.0, f_next = 0.0, g2 = 0.0;
    for (int attempt = 0; attempt <= kMaxBacktrackDoublings; ++attempt, L *= 2.0) {
        const double a_next = 1.0 / (2.0 * L) + std::sqrt(1.0 / (4.0 * L * L) + s.A / L);
        const double tau = 1.0 / (a_next * L);
        lambda = tau * s.v + (1.0 - tau) * s.x;
        const Vector g = phi.gradient(lambda);
        g2 = g.squaredNorm();
        if (g2 < kStationarityThreshold) {
            s.x = std::move(lambda);
            rep.stationary = true;
            rep.grad_sqnorm = g2;
            rep.f_x = phi.value(s.x);
            state.x_hat = prob.primal_from_dual(s.x);
            return rep;
        }
        Vector eta_next = lambda - g / L;
        f_lambda = phi.value(lambda);
        f_next = phi.value(eta_next);
        if (f_next <= f_lambda - g2 / (2.0 * L)) {
            s.v -= a_next * g;
            s.A += a_next;
            s.a = a_next;
            s.L = L;
            s.x = std::move(eta_next);
            s.k += 1;
            rep.y = std::move(lambda);
            rep.a = a_next;
            rep.grad_sqnorm = g2;
            rep.f_x = f_next;
            update_average(prob, state, rep);
            return rep;
        }
    }
    // same numerical-stationarity escape as the block variant
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(f_lambda));
    if (f_next <= f_lambda + noise) {
        s.x = std::move(lambda);
        rep.stationary = true;
        rep.grad_sqnorm = g2;
        rep.f_x = f_lambda;
        state.x_hat = prob.primal_from_dual(s.x);
        return rep;
    }
    throw SolverError("apdagd_baseline_step: backtracking exceeded 64 doublings");
}

Certificates certificates(const LinearlyConstrainedProblem& prob,
                          const PrimalDualState& state) {
    Certificates c;
    const Vector residual = prob.constraint_residual(state.x_hat);
    c.feasibility = residual.norm();
    c.gap = prob.primal_value(state.x_hat) + prob.dual().value(state.inner.x);
    return c;
}

PdaamResult run_pdaam(const LinearlyConstrainedProblem& prob, Vector lambda0,
                      Variant variant, const StoppingRule& stop, double l0,
                      PdMethod method) {
    PrimalDualState state = PrimalDualState::init(std::move(lambda0), l0);
    PdaamResult res;
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    res.trace.add({0, 0.0, prob.dual().value(state.inner.x), 0.0, 0.0,
                   state.inner.L, state.inner.A, 0.0});
    for (std::int64_t k = 0; k < stop.max_iterations; ++k) {
        const StepReport rep = method == PdMethod::pdaam
                                   ? pdaam_step(prob, state, variant)
                                   : apdagd_baseline_step(prob, state);
        const Vector residual = prob.constraint_residual(state.x_hat);
        const double gap = prob.primal_value(state.x_hat) +
                           prob.dual().value(state.inner.x);
        res.trace.add({state.inner.k, elapsed(), rep.f_x,
                       residual.lpNorm<1>(), gap, state.inner.L, state.inner.A,
                       rep.grad_sqnorm});
        if (rep.stationary) { res.stationary = true; break; }
        if (stop.grad_sqnorm_tol > 0.0 && rep.grad_sqnorm <= stop.grad_sqnorm_tol) break;
        if (stop.predicate && stop.predicate(res.trace)) break;
    }
    res.eta = state.inner.x;
    res.x_hat = std::move(state.x_hat);
    return res;
}

}  // namespace otaccel
