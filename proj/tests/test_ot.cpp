#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "otaccel/oracle.hpp"
#include "otaccel/ot.hpp"

using namespace otaccel;

namespace {

EntropicOTProblem zero_cost(Eigen::Index n, double gamma = 1.0) {
    return EntropicOTProblem(CostMatrix(Matrix::Zero(n, n)), gamma,
                             Histogram::uniform(n), Histogram::uniform(n));
}

EntropicOTProblem crossed(double gamma) {
    Matrix c(2, 2);
    c << 0.0, 1.0, 1.0, 0.0;
    Vector r(2), col(2);
    r << 0.7, 0.3;
    col << 0.3, 0.7;
    return EntropicOTProblem(CostMatrix(c), gamma, Histogram(r), Histogram(col));
}

EntropicOTProblem random_instance(std::mt19937& rng, Eigen::Index n, double gamma) {
    return EntropicOTProblem(testutil::random_cost(rng, n), gamma,
                             testutil::random_histogram(rng, n),
                             testutil::random_histogram(rng, n));
}

}  // namespace

TEST_CASE("ot_dual_value closed forms") {
    const EntropicOTProblem prob = zero_cost(2);
    const OTDualPoint zero{Vector::Zero(2), Vector::Zero(2)};
    CHECK(ot_dual_value(prob, zero) == doctest::Approx(std::log(4.0)));

    const OTDualPoint half{Vector::Constant(2, std::log(0.5)),
                           Vector::Constant(2, std::log(0.5))};
    CHECK(ot_dual_value(prob, half) == doctest::Approx(2.0 * std::log(2.0)));
}

TEST_CASE("ot_dual_value shift invariance") {
    std::mt19937 rng(41);
    const EntropicOTProblem prob = random_instance(rng, 3, 0.4);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        OTDualPoint p{Vector::Random(3), Vector::Random(3)};
        const double base = ot_dual_value(prob, p);
        OTDualPoint shifted = p;
        shifted.u.array() += unif(rng);
        shifted.v.array() += unif(rng);
        CHECK(ot_dual_value(prob, shifted) == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("ot_dual_gradient vanishes at the zero-cost uniform optimum") {
    const EntropicOTProblem prob = zero_cost(3);
    const auto [gu, gv] =
        ot_dual_gradient(prob, {Vector::Zero(3), Vector::Zero(3)});
    CHECK(gu.norm() < 1e-14);
    CHECK(gv.norm() < 1e-14);
}

TEST_CASE("ot_dual_gradient matches finite differences") {
    std::mt19937 rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        const EntropicOTProblem prob = random_instance(rng, 3, 0.3);
        const Vector point = Vector::Random(6);
        const auto f = [&](const Vector& x) {
            return ot_dual_value(prob, {x.head(3), x.tail(3)});
        };
        const Vector fd = finite_difference_gradient(f, point);
        const auto [gu, gv] = ot_dual_gradient(prob, {point.head(3), point.tail(3)});
        Vector g(6);
        g << gu, gv;
        CHECK((g - fd).norm() <= 1e-5 * (1.0 + g.norm()));
    }
}

TEST_CASE("gradient mass balance") {
    std::mt19937 rng(47);
    for (int trial = 0; trial < 50; ++trial) {
        const EntropicOTProblem prob = random_instance(rng, 4, 0.2);
        const auto [gu, gv] =
            ot_dual_gradient(prob, {Vector::Random(4), Vector::Random(4)});
        CHECK(std::abs(gu.sum()) < 1e-10);
        CHECK(std::abs(gv.sum()) < 1e-10);
    }
}

TEST_CASE("sinkhorn_u_update closed form and exact row marginals") {
    const EntropicOTProblem prob = zero_cost(2);
    const OTDualPoint next =
        sinkhorn_u_update(prob, {Vector::Zero(2), Vector::Zero(2)});
    CHECK(next.u[0] == doctest::Approx(-std::log(4.0)));
    CHECK(next.u[1] == doctest::Approx(-std::log(4.0)));

    std::mt19937 rng(53);
    const EntropicOTProblem rand = random_instance(rng, 4, 0.3);
    const OTDualPoint p{Vector::Random(4), Vector::Random(4)};
    const OTDualPoint after = sinkhorn_u_update(rand, p);
    const TransportPlan plan = primal_from_dual(rand, after);
    CHECK((plan.row_marginals() - rand.row_marginal().weights())
              .lpNorm<Eigen::Infinity>() < 1e-12);
    // block optimality: gradient over u vanished
    const auto [gu, gv] = ot_dual_gradient(rand, after);
    CHECK(gu.lpNorm<Eigen::Infinity>() < 1e-12);
    // fixed point: repeating the update is a no-op
    const OTDualPoint again = sinkhorn_u_update(rand, after);
    CHECK((again.u - after.u).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("one sweep on zero cost yields the product measure") {
    Vector r(2), c(2);
    r << 0.6, 0.4;
    c << 0.25, 0.75;
    const EntropicOTProblem prob(CostMatrix(Matrix::Zero(2, 2)), 1.0,
                                 Histogram(r), Histogram(c));
    OTDualPoint p{Vector::Zero(2), Vector::Zero(2)};
    p = sinkhorn_u_update(prob, p);
    p = sinkhorn_v_update(prob, p);
    const TransportPlan plan = primal_from_dual(prob, p);
    const Matrix product = r * c.transpose();
    CHECK((plan.matrix() - product).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("updates reject zero marginals") {
    Vector r(2);
    r << 1.0, 0.0;
    const EntropicOTProblem prob(CostMatrix(Matrix::Zero(2, 2)), 1.0,
                                 Histogram(r), Histogram::uniform(2));
    CHECK_THROWS_AS(sinkhorn_u_update(prob, {Vector::Zero(2), Vector::Zero(2)}),
                    std::invalid_argument);
}

TEST_CASE("run_sinkhorn matches the reference fixed point") {
    const EntropicOTProblem prob = crossed(0.5);
    const SinkhornResult res = run_sinkhorn(prob, {100000, 1e-12});
    const OTDualPoint ref = entropic_reference(prob);
    const TransportPlan ref_plan = primal_from_dual(prob, ref);
    CHECK((res.plan.matrix() - ref_plan.matrix()).lpNorm<Eigen::Infinity>() < 1e-8);
    // dual value non-increasing sweep to sweep
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        CHECK(res.trace.rows()[i].dual_value <=
              res.trace.rows()[i - 1].dual_value + 1e-12);
}

TEST_CASE("primal_from_dual basics") {
    const EntropicOTProblem prob = zero_cost(2);
    const TransportPlan plan =
        primal_from_dual(prob, {Vector::Zero(2), Vector::Zero(2)});
    CHECK((plan.matrix().array() - 0.25).abs().maxCoeff() < 1e-14);

    // (u + t, v - t) leaves the plan unchanged
    const TransportPlan shifted =
        primal_from_dual(prob, {Vector::Constant(2, 3.0), Vector::Constant(2, -3.0)});
    CHECK((shifted.matrix() - plan.matrix()).lpNorm<Eigen::Infinity>() < 1e-13);
    CHECK(plan.matrix().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("round_to_polytope hand example") {
    Matrix x(2, 2);
    x << 1.0, 0.0, 0.0, 0.0;
    const TransportPlan rounded = round_to_polytope(
        TransportPlan(x), Histogram::uniform(2), Histogram::uniform(2));
    Matrix expected(2, 2);
    expected << 0.5, 0.0, 0.0, 0.5;
    CHECK((rounded.matrix() - expected).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK(rounded.exact_marginals());
}

TEST_CASE("round_to_polytope is the identity on feasible plans") {
    Vector r(2), c(2);
    r << 0.6, 0.4;
    c << 0.3, 0.7;
    const Matrix feasible = r * c.transpose();
    const TransportPlan rounded =
        round_to_polytope(TransportPlan(feasible), Histogram(r), Histogram(c));
    CHECK((rounded.matrix() - feasible).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("round_to_polytope property: exact marginals on random inputs") {
    std::mt19937 rng(59);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::Index n = 2 + trial % 4;
        Matrix x(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) x(i, j) = unif(rng);
        x /= x.sum();
        const Histogram r = testutil::random_histogram(rng, n);
        const Histogram c = testutil::random_histogram(rng, n);
        const TransportPlan rounded = round_to_polytope(TransportPlan(x), r, c);
        CHECK((rounded.row_marginals() - r.weights()).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK((rounded.col_marginals() - c.weights()).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(rounded.matrix().minCoeff() >= 0.0);
        // l1 movement bound from the rounding lemma
        const TransportPlan original(x);
        const double moved = (rounded.matrix() - x).lpNorm<1>();
        const double err =
            (original.row_marginals() - r.weights()).lpNorm<1>() +
            (original.col_marginals() - c.weights()).lpNorm<1>();
        CHECK(moved <= 2.0 * err + 1e-10);
    }
}

TEST_CASE("dual_radius_bound closed forms") {
    const EntropicOTProblem a(
        CostMatrix((Matrix(2, 2) << 0.0, 1.0, 1.0, 0.0).finished()), 1.0,
        Histogram::uniform(2), Histogram::uniform(2));
    CHECK(dual_radius_bound(a) == doctest::Approx(1.0 + 0.5 * std::log(2.0)));
    CHECK(dual_radius_bound(a) == doctest::Approx(1.346574).epsilon(1e-5));

    // gamma -> 0 limit: sqrt(N/2) ||C||_inf
    const EntropicOTProblem b(
        CostMatrix((Matrix(2, 2) << 0.0, 1.0, 1.0, 0.0).finished()), 1e-12,
        Histogram::uniform(2), Histogram::uniform(2));
    CHECK(dual_radius_bound(b) == doctest::Approx(1.0).epsilon(1e-9));

    Matrix c4 = Matrix::Ones(4, 4) * 0.8;
    const double gamma = 0.3;
    const EntropicOTProblem d(CostMatrix(c4), gamma, Histogram::uniform(4),
                              Histogram::uniform(4));
    CHECK(dual_radius_bound(d) ==
          doctest::Approx(std::sqrt(2.0) * (0.8 + gamma / 2.0 * std::log(4.0))));
}

TEST_CASE("accelerated Sinkhorn agrees with Sinkhorn and keeps L bounded") {
    const EntropicOTProblem prob = crossed(0.25);
    StoppingRule stop;
    stop.max_iterations = 5000;
    stop.predicate = [](const ConvergenceTrace& t) {
        return t.back().feasibility_l1 < 1e-11;
    };
    const AcceleratedSinkhornResult acc = run_accelerated_sinkhorn(prob, stop);
    const SinkhornResult plain = run_sinkhorn(prob, {100000, 1e-12});
    CHECK((acc.plan.matrix() - plain.plan.matrix()).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(ot_dual_value(prob, acc.point) ==
          doctest::Approx(ot_dual_value(prob, plain.point)).epsilon(1e-8));

    const double l_true = 2.0 / prob.gamma();
    for (const auto& row : acc.trace.rows())
        if (row.iteration >= 1) CHECK(row.lipschitz_estimate <= 2.0 * 2.0 * l_true);
}

TEST_CASE("dual range bound at convergence") {
    std::mt19937 rng(61);
    for (int trial = 0; trial < 5; ++trial) {
        const EntropicOTProblem prob = random_instance(rng, 4, 0.2);
        const OTDualPoint star = entropic_reference(prob);
        const double spread = star.u.maxCoeff() - star.u.minCoeff();
        const double bound = prob.cost().max_entry() / prob.gamma() -
                             std::log(prob.row_marginal().min_entry());
        CHECK(spread <= bound + 1e-9);
    }
}

TEST_CASE("approximate_ot on a zero-cost instance") {
    const ApproxOTResult res = approximate_ot(
        CostMatrix(Matrix::Zero(3, 3)), Histogram::uniform(3),
        Histogram::uniform(3), 0.1);
    CHECK(res.cost == 0.0);
    CHECK(res.iterations == 0);
    CHECK(res.plan.matrix().sum() == doctest::Approx(1.0));
}

TEST_CASE("approximate_ot beats the oracle bound on integer costs") {
    Matrix c(3, 3);
    c << 0.0, 2.0, 5.0,
         2.0, 0.0, 3.0,
         4.0, 1.0, 0.0;
    Vector r(3), col(3);
    r << 0.5, 0.3, 0.2;
    col << 0.2, 0.3, 0.5;
    const Histogram hr(r), hc(col);
    const CostMatrix cost(c);
    const ExactOTResult oracle = exact_ot_bruteforce(cost, hr, hc);
    const ApproxOTResult res = approximate_ot(cost, hr, hc, 0.05);
    CHECK(res.plan.exact_marginals());
    CHECK((res.plan.row_marginals() - r).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((res.plan.col_marginals() - col).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(res.cost <= oracle.optimal_cost + 0.05);
}

TEST_CASE("approximate_ot exhaustion carries certificates") {
    std::mt19937 rng(67);
    const CostMatrix cost = testutil::random_cost(rng, 4);
    CHECK_THROWS_AS(approximate_ot(cost, testutil::random_histogram(rng, 4),
                                   testutil::random_histogram(rng, 4), 0.05,
                                   /*max_iterations=*/2),
                    SolverError);
}
