#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>

#include "otaccel/core_math.hpp"
#include "otaccel/trace.hpp"

namespace otaccel {

// Objective with a fixed partition of coordinates into blocks, exposing
// exact minimization over a single block with the others held fixed.
class BlockObjective {
public:
    virtual ~BlockObjective() = default;

    virtual int num_blocks() const = 0;
    virtual Eigen::Index dimension() const = 0;
    virtual double value(const Vector& x) const = 0;
    virtual Vector gradient(const Vector& x) const = 0;
    // ||grad restricted to block i||^2
    virtual double block_gradient_sqnorm(const Vector& x, int block) const = 0;
    // argmin of the objective over block i, other coordinates untouched
    virtual Vector block_minimize(const Vector& x, int block) const = 0;
};

// The gradient vanished (to working precision) at the extrapolated point;
// the current point is a solution.
class StationarityError : public std::runtime_error {
public:
    StationarityError() : std::runtime_error("gradient is zero: stationary point reached") {}
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Gradient squared norms below this are treated as exact zero.
inline constexpr double kStationarityThreshold = 1e-24;
inline constexpr int kMaxBacktrackDoublings = 64;

struct SolverState {
    Vector x;              // iterate
    Vector v;              // momentum point
    double A = 0.0;        // accumulated step weight
    double a = 0.0;        // last accepted step weight
    double L = 1.0;        // current Lipschitz estimate (adaptive variant)
    std::int64_t k = 0;

    static SolverState init(Vector x0, double l0 = 1.0);
};

enum class Variant { line_search, adaptive };

struct StepReport {
    bool stationary = false;
    Vector y;               // extrapolated point of the accepted step
    double a = 0.0;         // accepted step weight
    double grad_sqnorm = 0.0;
    double f_x = 0.0;       // objective at the new iterate
};

struct StoppingRule {
    std::int64_t max_iterations = 1000;
    double grad_sqnorm_tol = 0.0;
    std::function<bool(const ConvergenceTrace&)> predicate;  // optional
};

// Minimize f(x + beta (v - x)) over beta in [0,1] by golden-section search
// to interval width 1e-10; returns the best of the interior point and both
// endpoints, so f(y) <= f(x) always.
std::pair<double, Vector> line_search_beta(const BlockObjective& obj,
                                           const Vector& x, const Vector& v);

// Gauss-Southwell rule: block with the largest gradient block norm,
// ties broken by lowest index.
int select_block(const BlockObjective& obj, const Vector& y);

// Largest positive root a of
//   (a^2/2) g^2 + a (f_next - f_y) + A (f_next - f_y) = 0,
// i.e. f_y - a^2 g^2 / (2(A + a)) = f_next. Throws StationarityError when
// f_next >= f_y (the only root is a = 0) or g^2 is numerically zero.
double solve_step_quadratic(double A, double f_y, double f_next, double grad_sqnorm);

// One iteration of the line-search variant. On stationarity, the state's
// iterate is moved to the extrapolated point and the report says so.
StepReport aam_line_search_step(const BlockObjective& obj, SolverState& state);

// One iteration of the adaptive variant: halve L, then backtrack
// (doubling L) until f(x+) <= f(y) - ||grad f(y)||^2 / (2 L).
StepReport aam_adaptive_step(const BlockObjective& obj, SolverState& state);

StepReport aam_step(const BlockObjective& obj, SolverState& state, Variant variant);

struct AamResult {
    Vector x;
    ConvergenceTrace trace;
    bool stationary = false;
};

AamResult run_aam(const BlockObjective& obj, Vector x0, Variant variant,
                  const StoppingRule& stop, double l0 = 1.0);

}  // namespace otaccel
