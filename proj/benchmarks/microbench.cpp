#include <benchmark/benchmark.h>

#include <random>

#include "otaccel/core_math.hpp"
#include "otaccel/ot.hpp"
#include "otaccel/pdaam.hpp"

using namespace otaccel;

namespace {

EntropicOTProblem make_problem(Eigen::Index n, double gamma) {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    Matrix c(n, n);
    Vector r(n), col(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r[i] = unif(rng);
        col[i] = unif(rng);
        for (Eigen::Index j = 0; j < n; ++j) c(i, j) = i == j ? 0.0 : unif(rng);
    }
    return EntropicOTProblem(CostMatrix(std::move(c)), gamma, Histogram(std::move(r)),
                             Histogram(std::move(col)));
}

void bm_log_sum_exp(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> unif(-100.0, 100.0);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = unif(rng);
    for (auto _ : state) benchmark::DoNotOptimize(log_sum_exp(x));
}
BENCHMARK(bm_log_sum_exp)->Arg(64)->Arg(1024)->Arg(16384);

void bm_sinkhorn_sweep(benchmark::State& state) {
    const EntropicOTProblem prob = make_problem(state.range(0), 0.1);
    OTDualPoint p{Vector::Zero(prob.size()), Vector::Zero(prob.size())};
    for (auto _ : state) {
        p = sinkhorn_u_update(prob, p);
        p = sinkhorn_v_update(prob, p);
        benchmark::DoNotOptimize(p.u.sum());
    }
}
BENCHMARK(bm_sinkhorn_sweep)->Arg(16)->Arg(64)->Arg(128);

void bm_accelerated_step(benchmark::State& state) {
    const EntropicOTProblem prob = make_problem(state.range(0), 0.1);
    OTDualProblem pd(prob);
    PrimalDualState pds = PrimalDualState::init(pd.zero_point());
    for (auto _ : state) {
        const StepReport rep = accelerated_sinkhorn_step(pd, pds);
        benchmark::DoNotOptimize(rep.f_x);
        if (rep.stationary) pds = PrimalDualState::init(pd.zero_point());
    }
}
BENCHMARK(bm_accelerated_step)->Arg(16)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
