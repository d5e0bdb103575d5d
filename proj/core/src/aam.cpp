#include "otaccel/aam.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace otaccel {

SolverState SolverState::init(Vector x0, double l0) {
    SolverState s;
    s.v = x0;
    s.x = std::move(x0);
    s.L = l0;
    return s;
}

std::pair<double, Vector> line_search_beta(const BlockObjective& obj,
                                           const Vector& x, const Vector& v) {
    const Vector d = v - x;
    if (d.squaredNorm() == 0.0) return {0.0, x};

    const auto eval = [&](double beta) {
        const double f = obj.value(x + beta * d);
        if (!std::isfinite(f))
            throw SolverError("line_search_beta: non-finite objective at beta=" +
                              std::to_string(beta));
        return f;
    };

    constexpr double invphi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double b1 = hi - invphi * (hi - lo);
    double b2 = lo + invphi * (hi - lo);
    double f1 = eval(b1), f2 = eval(b2);
    while (hi - lo > 1e-10) {
        if (f1 <= f2) {
            hi = b2; b2 = b1; f2 = f1;
            b1 = hi - invphi * (hi - lo);
            f1 = eval(b1);
        } else {
            lo = b1; b1 = b2; f1 = f2;
            b2 = lo + invphi * (hi - lo);
            f2 = eval(b2);
        }
    }
    double beta = 0.5 * (lo + hi);
    double fbeta = eval(beta);
    // endpoints may beat the interior bracket
    const double f0 = eval(0.0), fone = eval(1.0);
    if (f0 <= fbeta && f0 <= fone) { beta = 0.0; }
    else if (fone < fbeta) { beta = 1.0; }
    return {beta, x + beta * d};
}

int select_block(const BlockObjective& obj, const Vector& y) {
    const int n = obj.num_blocks();
    int best = 0;
    double best_sq = obj.block_gradient_sqnorm(y, 0);
    for (int i = 1; i < n; ++i) {
        const double sq = obj.block_gradient_sqnorm(y, i);
        if (sq > best_sq) { best = i; best_sq = sq; }
    }
    return best;
}

double solve_step_quadratic(double A, double f_y, double f_next, double grad_sqnorm) {
    if (grad_sqnorm < kStationarityThreshold) throw StationarityError();
    const double drop = f_y - f_next;
    if (!(drop > 0.0)) throw StationarityError();
    // (g^2/2) a^2 - drop a - A drop = 0
    return (drop + std::sqrt(drop * drop + 2.0 * grad_sqnorm * A * drop)) / grad_sqnorm;
}

StepReport aam_line_search_step(const BlockObjective& obj, SolverState& state) {
    StepReport rep;
    auto [beta, y] = line_search_beta(obj, state.x, state.v);
    rep.y = y;
    const Vector g = obj.gradient(y);
    rep.grad_sqnorm = g.squaredNorm();
    if (rep.grad_sqnorm < kStationarityThreshold) {
        state.x = y;
        rep.stationary = true;
        rep.f_x = obj.value(state.x);
        return rep;
    }
    const int block = select_block(obj, y);
    Vector x_next = obj.block_minimize(y, block);
    const double f_y = obj.value(y);
    const double f_next = obj.value(x_next);
    double a;
    try {
        a = solve_step_quadratic(state.A, f_y, f_next, rep.grad_sqnorm);
    } catch (const StationarityError&) {
        state.x = y;
        rep.y = y;
        rep.stationary = true;
        rep.f_x = f_y;
        return rep;
    }
    state.A += a;
    state.a = a;
    state.v -= a * g;
    state.x = std::move(x_next);
    state.k += 1;
    rep.a = a;
    rep.f_x = f_next;
    return rep;
}

StepReport aam_adaptive_step(const BlockObjective& obj, SolverState& state) {
    StepReport rep;
    double L = state.L / 2.0;
    Vector y;
    double f_y = 0.0, f_next = 0.0, g2 = 0.0;
    for (int attempt = 0; attempt <= kMaxBacktrackDoublings; ++attempt, L *= 2.0) {
        const double a_next = 1.0 / (2.0 * L) +
                              std::sqrt(1.0 / (4.0 * L * L) + state.A / L);
        const double tau = 1.0 / (a_next * L);
        y = tau * state.v + (1.0 - tau) * state.x;
        const Vector g = obj.gradient(y);
        g2 = g.squaredNorm();
        if (g2 < kStationarityThreshold) {
            state.x = std::move(y);
            rep.y = state.x;
            rep.stationary = true;
            rep.grad_sqnorm = g2;
            rep.f_x = obj.value(state.x);
            return rep;
        }
        const int block = select_block(obj, y);
        Vector x_next = obj.block_minimize(y, block);
        f_y = obj.value(y);
        f_next = obj.value(x_next);
        if (f_next <= f_y - g2 / (2.0 * L)) {
            state.v -= a_next * g;
            state.A += a_next;
            state.a = a_next;
            state.L = L;
            state.x = std::move(x_next);
            state.k += 1;
            rep.y = std::move(y);
            rep.a = a_next;
            rep.grad_sqnorm = g2;
            rep.f_x = f_next;
            return rep;
        }
    }
    // Exhaustion with the exact block step producing no decrease measurable
    // above rounding means the dual has converged to working precision; a
    // genuine descent failure (inconsistent oracle) increases the value.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(f_y));
    if (f_next <= f_y + noise) {
        state.x = std::move(y);
        rep.y = state.x;
        rep.stationary = true;
        rep.grad_sqnorm = g2;
        rep.f_x = f_y;
        return rep;
    }
    throw SolverError("aam_adaptive_step: backtracking exceeded 64 doublings; "
                      "objective is not L-smooth or the oracle is inconsistent");
}

StepReport aam_step(const BlockObjective& obj, SolverState& state, Variant variant) {
    return variant == Variant::line_search ? aam_line_search_step(obj, state)
                                           : aam_adaptive_step(obj, state);
}

AamResult run_aam(const BlockObjective& obj, Vector x0, Variant variant,
                  const StoppingRule& stop, double l0) {
    SolverState state = SolverState::init(std::move(x0), l0);
    AamResult res;
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    res.trace.add({0, 0.0, obj.value(state.x), 0.0, 0.0, state.L, state.A, 0.0});
    for (std::int64_t k = 0; k < stop.max_iterations; ++k) {
        const StepReport rep = aam_step(obj, state, variant);
        res.trace.add({state.k, elapsed(), rep.f_x, 0.0, 0.0, state.L, state.A,
                       rep.grad_sqnorm});
        if (rep.stationary) { res.stationary = true; break; }
        if (stop.grad_sqnorm_tol > 0.0 && rep.grad_sqnorm <= stop.grad_sqnorm_tol) break;
        if (stop.predicate && stop.predicate(res.trace)) break;
    }
    res.x = std::move(state.x);
    return res;
}

}  // namespace otaccel
