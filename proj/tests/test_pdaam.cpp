#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "otaccel/oracle.hpp"
#include "otaccel/ot.hpp"
#include "otaccel/pdaam.hpp"

using namespace otaccel;

namespace {

EntropicOTProblem small_instance(double gamma = 0.1) {
    Matrix c(2, 2);
    c << 0.0, 1.0, 1.0, 0.0;
    Vector r(2), col(2);
    r << 0.7, 0.3;
    col << 0.3, 0.7;
    return EntropicOTProblem(CostMatrix(c), gamma, Histogram(r), Histogram(col));
}

}  // namespace

TEST_CASE("first primal average equals x(lambda^0)") {
    const EntropicOTProblem prob = small_instance();
    OTDualProblem pd(prob);
    PrimalDualState state = PrimalDualState::init(pd.zero_point());
    const StepReport rep = pdaam_step(pd, state, Variant::adaptive);
    REQUIRE_FALSE(rep.stationary);
    const Vector expected = pd.primal_from_dual(rep.y);
    CHECK((state.x_hat - expected).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("primal average stays a mass-1 nonnegative plan") {
    const EntropicOTProblem prob = small_instance();
    OTDualProblem pd(prob);
    PrimalDualState state = PrimalDualState::init(pd.zero_point());
    for (int k = 0; k < 50; ++k) {
        const StepReport rep = pdaam_step(pd, state, Variant::adaptive);
        if (rep.stationary) break;
        CHECK(state.x_hat.minCoeff() >= 0.0);
        CHECK(state.x_hat.sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("certificates decrease along the primal average") {
    const EntropicOTProblem prob = small_instance(0.1);
    OTDualProblem pd(prob);
    PrimalDualState state = PrimalDualState::init(pd.zero_point());
    double feas = 1.0, gap = 1.0;
    // the average forgets the early iterates at an O(1/k^2) rate, so the
    // certificates need a few thousand steps to clear 1e-6 even though the
    // dual itself converges almost immediately
    for (int k = 0; k < 5000; ++k) {
        const StepReport rep = pdaam_step(pd, state, Variant::adaptive);
        const Certificates c = certificates(pd, state);
        feas = c.feasibility;
        gap = std::abs(c.gap);
        if (k == 199) {
            CHECK(feas < 1e-3);
            CHECK(gap < 1e-3);
        }
        if (rep.stationary || (feas < 1e-6 && gap < 1e-6)) break;
    }
    CHECK(feas < 1e-6);
    CHECK(gap < 1e-6);

    // cross-check against the long-run Sinkhorn fixed point
    const OTDualPoint ref = entropic_reference(prob);
    const double phi_star = ot_dual_value(prob, ref);
    const double phi_final = ot_dual_value(prob, pd.to_dual_point(state.inner.x));
    CHECK(phi_final == doctest::Approx(phi_star).epsilon(1e-6));
}

TEST_CASE("zero-cost uniform instance is feasible at the zero dual point") {
    const EntropicOTProblem prob(CostMatrix(Matrix::Zero(2, 2)), 1.0,
                                 Histogram::uniform(2), Histogram::uniform(2));
    OTDualProblem pd(prob);
    PrimalDualState state = PrimalDualState::init(pd.zero_point());
    const StepReport rep = pdaam_step(pd, state, Variant::adaptive);
    CHECK(rep.stationary);  // gradient vanishes at the uniform optimum
    const Certificates c = certificates(pd, state);
    CHECK(c.feasibility < 1e-14);
    CHECK(std::abs(c.gap) < 1e-12);
}

TEST_CASE("apdagd baseline reaches the same optimum") {
    const EntropicOTProblem prob = small_instance(0.2);
    OTDualProblem pd(prob);

    StoppingRule stop;
    stop.max_iterations = 5000;
    stop.predicate = [](const ConvergenceTrace& t) {
        return t.back().feasibility_l1 < 1e-10;
    };
    const PdaamResult accel = run_pdaam(pd, pd.zero_point(), Variant::adaptive, stop);
    const PdaamResult base = run_pdaam(pd, pd.zero_point(), Variant::adaptive, stop,
                                       1.0, PdMethod::apdagd_baseline);
    const double phi_a = pd.dual().value(accel.eta);
    const double phi_b = pd.dual().value(base.eta);
    CHECK(phi_a == doctest::Approx(phi_b).epsilon(1e-8));
}

TEST_CASE("apdagd first iteration with accepted L is a plain gradient step") {
    const EntropicOTProblem prob = small_instance(0.2);
    OTDualProblem pd(prob);
    PrimalDualState state = PrimalDualState::init(pd.zero_point());
    const StepReport rep = apdagd_baseline_step(pd, state);
    REQUIRE_FALSE(rep.stationary);
    const Vector expected =
        rep.y - pd.dual().gradient(rep.y) / state.inner.L;
    CHECK((state.inner.x - expected).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("gap lower bound -R * feasibility along a run") {
    const EntropicOTProblem prob = small_instance(0.05);
    OTDualProblem pd(prob);
    const double radius = dual_radius_bound(prob);
    PrimalDualState state = PrimalDualState::init(pd.zero_point());
    for (int k = 0; k < 100; ++k) {
        const StepReport rep = pdaam_step(pd, state, Variant::adaptive);
        if (rep.stationary) break;
        const Certificates c = certificates(pd, state);
        CHECK(c.gap >= -radius * c.feasibility - 1e-10);
    }
}

TEST_CASE("certificate product envelopes on a small instance") {
    const EntropicOTProblem prob = small_instance(0.1);
    OTDualProblem pd(prob);
    const double radius = dual_radius_bound(prob);
    PrimalDualState state = PrimalDualState::init(pd.zero_point());
    for (int k = 0; k < 300; ++k) {
        const StepReport rep = pdaam_step(pd, state, Variant::adaptive);
        if (rep.stationary) break;
        const Certificates c = certificates(pd, state);
        const double A = state.inner.A;
        CHECK(A * c.feasibility <= 2.0 * radius + 1e-9);
        CHECK(A * std::abs(c.gap) <= 2.0 * radius * radius + 1e-9);
    }
}

TEST_CASE("dual objective is convex along sampled pairs") {
    const EntropicOTProblem prob = small_instance(0.3);
    OTDualProblem pd(prob);
    const BlockObjective& phi = pd.dual();
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    for (int trial = 0; trial < 50; ++trial) {
        Vector a(4), b(4);
        for (int i = 0; i < 4; ++i) { a[i] = unif(rng); b[i] = unif(rng); }
        const double lhs = phi.value(b);
        const double rhs = phi.value(a) + phi.gradient(a).dot(b - a);
        CHECK(lhs >= rhs - 1e-10);
    }
}
