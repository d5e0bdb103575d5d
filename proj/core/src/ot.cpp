#include "otaccel/ot.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace otaccel {

namespace {

Matrix plan_from_log(const LogKernel& kernel, const Vector& u, const Vector& v,
                     double log_total) {
    const Eigen::Index n = kernel.size();
    Matrix plan(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            plan(i, j) = std::exp(u[i] + v[j] + kernel.log_entries()(i, j) - log_total);
    return plan;
}

void require_positive(const Histogram& h, const char* what) {
    if (h.min_entry() <= 0.0)
        throw std::invalid_argument(std::string(what) +
                                    ": marginal has a zero entry; smooth it first");
}

double marginal_l1_error(const TransportPlan& plan, const Histogram& r,
                         const Histogram& c) {
    return (plan.row_marginals() - r.weights()).lpNorm<1>() +
           (plan.col_marginals() - c.weights()).lpNorm<1>();
}

}  // namespace

TransportPlan::TransportPlan(Matrix plan, bool exact_marginals)
    : plan_(std::move(plan)), exact_marginals_(exact_marginals) {
    if (plan_.rows() != plan_.cols())
        throw std::invalid_argument("TransportPlan: must be square");
    if ((plan_.array() < 0.0).any())
        throw std::invalid_argument("TransportPlan: negative entry");
    if (std::abs(plan_.sum() - 1.0) > 1e-10)
        throw std::invalid_argument("TransportPlan: total mass must be 1");
}

EntropicOTProblem::EntropicOTProblem(CostMatrix cost, double gamma, Histogram r,
                                     Histogram c)
    : cost_(std::move(cost)), gamma_(gamma), r_(std::move(r)), c_(std::move(c)),
      kernel_(cost_, gamma) {
    if (r_.size() != cost_.size() || c_.size() != cost_.size())
        throw std::invalid_argument("EntropicOTProblem: size mismatch");
}

double ot_dual_value(const EntropicOTProblem& prob, const OTDualPoint& p) {
    const LogMarginals lm = log_marginals(prob.kernel(), p.u, p.v);
    return prob.gamma() * (lm.log_total - p.u.dot(prob.row_marginal().weights()) -
                           p.v.dot(prob.col_marginal().weights()));
}

std::pair<Vector, Vector> ot_dual_gradient(const EntropicOTProblem& prob,
                                           const OTDualPoint& p) {
    const LogMarginals lm = log_marginals(prob.kernel(), p.u, p.v);
    const Vector row = (lm.log_row_sums.array() - lm.log_total).exp();
    const Vector col = (lm.log_col_sums.array() - lm.log_total).exp();
    return {prob.gamma() * (row - prob.row_marginal().weights()),
            prob.gamma() * (col - prob.col_marginal().weights())};
}

OTDualPoint sinkhorn_u_update(const EntropicOTProblem& prob, const OTDualPoint& p) {
    require_positive(prob.row_marginal(), "sinkhorn_u_update");
    const LogMarginals lm = log_marginals(prob.kernel(), p.u, p.v);
    OTDualPoint next = p;
    next.u = p.u + prob.row_marginal().weights().array().log().matrix() -
             lm.log_row_sums;
    return next;
}

OTDualPoint sinkhorn_v_update(const EntropicOTProblem& prob, const OTDualPoint& p) {
    require_positive(prob.col_marginal(), "sinkhorn_v_update");
    const LogMarginals lm = log_marginals(prob.kernel(), p.u, p.v);
    OTDualPoint next = p;
    next.v = p.v + prob.col_marginal().weights().array().log().matrix() -
             lm.log_col_sums;
    return next;
}

TransportPlan primal_from_dual(const EntropicOTProblem& prob, const OTDualPoint& p) {
    const LogMarginals lm = log_marginals(prob.kernel(), p.u, p.v);
    return TransportPlan(plan_from_log(prob.kernel(), p.u, p.v, lm.log_total));
}

double entropic_primal_value(const EntropicOTProblem& prob, const Matrix& plan) {
    double value = (prob.cost().entries().array() * plan.array()).sum();
    for (Eigen::Index i = 0; i < plan.rows(); ++i)
        for (Eigen::Index j = 0; j < plan.cols(); ++j) {
            const double x = plan(i, j);
            if (x > 0.0) value += prob.gamma() * x * std::log(x);
        }
    return value;
}

SinkhornResult run_sinkhorn(const EntropicOTProblem& prob, const SinkhornStop& stop) {
    OTDualPoint p{Vector::Zero(prob.size()), Vector::Zero(prob.size())};
    ConvergenceTrace trace;
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    TransportPlan plan = primal_from_dual(prob, p);
    trace.add({0, 0.0, ot_dual_value(prob, p),
               marginal_l1_error(plan, prob.row_marginal(), prob.col_marginal()),
               0.0, 0.0, 0.0, 0.0});
    for (std::int64_t k = 1; k <= stop.max_sweeps; ++k) {
        p = sinkhorn_u_update(prob, p);
        p = sinkhorn_v_update(prob, p);
        plan = primal_from_dual(prob, p);
        const double err =
            marginal_l1_error(plan, prob.row_marginal(), prob.col_marginal());
        trace.add({k, elapsed(), ot_dual_value(prob, p), err, 0.0, 0.0, 0.0, 0.0});
        if (err <= stop.marginal_l1_tol) break;
    }
    return {std::move(p), std::move(plan), std::move(trace)};
}

TransportPlan round_to_polytope(const TransportPlan& plan, const Histogram& r,
                                const Histogram& c) {
    Matrix x = plan.matrix();
    const Eigen::Index n = x.rows();
    Vector rows = x.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = rows[i] > 0.0 ? std::min(r[i] / rows[i], 1.0) : 1.0;
        x.row(i) *= scale;
    }
    Vector cols = x.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = cols[j] > 0.0 ? std::min(c[j] / cols[j], 1.0) : 1.0;
        x.col(j) *= scale;
    }
    const Vector err_r = r.weights() - x.rowwise().sum();
    const Vector err_c = c.weights() - x.colwise().sum().transpose();
    const double mass = err_r.lpNorm<1>();
    if (mass > 0.0) x += err_r * err_c.transpose() / mass;
    // scrub tiny negatives from the rank-one correction rounding
    x = x.cwiseMax(0.0);
    return TransportPlan(std::move(x), /*exact_marginals=*/true);
}

double dual_radius_bound(const EntropicOTProblem& prob) {
    require_positive(prob.row_marginal(), "dual_radius_bound");
    require_positive(prob.col_marginal(), "dual_radius_bound");
    const double min_marginal =
        std::min(prob.row_marginal().min_entry(), prob.col_marginal().min_entry());
    const double n = static_cast<double>(prob.size());
    return std::sqrt(n / 2.0) *
           (prob.cost().max_entry() - 0.5 * prob.gamma() * std::log(min_marginal));
}

// --- OTDualProblem ---------------------------------------------------------

OTDualProblem::OTDualProblem(const EntropicOTProblem& prob) : prob_(prob) {}

OTDualPoint OTDualProblem::to_dual_point(const Vector& lambda) const {
    const Eigen::Index n = prob_.size();
    return {-lambda.head(n) / prob_.gamma(), -lambda.tail(n) / prob_.gamma()};
}

Vector OTDualProblem::from_dual_point(const OTDualPoint& p) const {
    const Eigen::Index n = prob_.size();
    Vector lambda(2 * n);
    lambda.head(n) = -prob_.gamma() * p.u;
    lambda.tail(n) = -prob_.gamma() * p.v;
    return lambda;
}

Vector OTDualProblem::primal_from_dual(const Vector& lambda) const {
    const TransportPlan plan = otaccel::primal_from_dual(prob_, to_dual_point(lambda));
    const Eigen::Index n = prob_.size();
    Matrix m = plan.matrix();
    return Eigen::Map<Vector>(m.data(), n * n);
}

double OTDualProblem::primal_value(const Vector& x) const {
    const Eigen::Index n = prob_.size();
    const Eigen::Map<const Matrix> plan(x.data(), n, n);
    return entropic_primal_value(prob_, plan);
}

Vector OTDualProblem::constraint_residual(const Vector& x) const {
    const Eigen::Index n = prob_.size();
    const Eigen::Map<const Matrix> plan(x.data(), n, n);
    Vector res(2 * n);
    res.head(n) = plan.rowwise().sum() - prob_.row_marginal().weights();
    res.tail(n) = plan.colwise().sum().transpose() - prob_.col_marginal().weights();
    return res;
}

Eigen::Index OTDualProblem::Objective::dimension() const {
    return 2 * owner_.prob_.size();
}

double OTDualProblem::Objective::value(const Vector& x) const {
    return ot_dual_value(owner_.prob_, owner_.to_dual_point(x));
}

Vector OTDualProblem::Objective::gradient(const Vector& x) const {
    // in scaled coordinates the gradient is b - A x(lambda)
    const auto [gu, gv] = ot_dual_gradient(owner_.prob_, owner_.to_dual_point(x));
    const Eigen::Index n = owner_.prob_.size();
    Vector g(2 * n);
    g.head(n) = -gu / owner_.prob_.gamma();
    g.tail(n) = -gv / owner_.prob_.gamma();
    return g;
}

double OTDualProblem::Objective::block_gradient_sqnorm(const Vector& x, int block) const {
    const Vector g = gradient(x);
    const Eigen::Index n = owner_.prob_.size();
    return block == 0 ? g.head(n).squaredNorm() : g.tail(n).squaredNorm();
}

Vector OTDualProblem::Objective::block_minimize(const Vector& x, int block) const {
    const OTDualPoint p = owner_.to_dual_point(x);
    const OTDualPoint next = block == 0 ? sinkhorn_u_update(owner_.prob_, p)
                                        : sinkhorn_v_update(owner_.prob_, p);
    return owner_.from_dual_point(next);
}

AcceleratedSinkhornResult run_accelerated_sinkhorn(const EntropicOTProblem& prob,
                                                   const StoppingRule& stop,
                                                   double l0) {
    OTDualProblem pd(prob);
    PdaamResult res = run_pdaam(pd, pd.zero_point(), Variant::adaptive, stop, l0);
    const Eigen::Index n = prob.size();
    Matrix plan = Eigen::Map<const Matrix>(res.x_hat.data(), n, n);
    return {pd.to_dual_point(res.eta), TransportPlan(std::move(plan)),
            std::move(res.trace)};
}

ApproxOTResult approximate_ot(const CostMatrix& cost, const Histogram& r,
                              const Histogram& c, double eps,
                              std::int64_t max_iterations, double l0) {
    if (!(eps > 0.0)) throw std::invalid_argument("approximate_ot: eps must be > 0");
    const Eigen::Index n = cost.size();
    if (n < 2) throw std::invalid_argument("approximate_ot: N >= 2 required");

    if (cost.max_entry() == 0.0) {
        // every feasible plan is optimal
        TransportPlan product(r.weights() * c.weights().transpose(), true);
        return {std::move(product), 0.0, ConvergenceTrace{}, 0};
    }

    const double gamma = eps / (4.0 * std::log(static_cast<double>(n)));
    const double eps_prime = eps / (8.0 * cost.max_entry());
    const Histogram r_tilde = smooth_marginals(r, eps_prime);
    const Histogram c_tilde = smooth_marginals(c, eps_prime);
    const EntropicOTProblem prob(cost, gamma, r_tilde, c_tilde);
    OTDualProblem pd(prob);

    PrimalDualState state = PrimalDualState::init(pd.zero_point(), l0);
    ConvergenceTrace trace;
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    double last_checked_feas = std::numeric_limits<double>::infinity();
    double best_gap = std::numeric_limits<double>::infinity();
    double best_round_gap = std::numeric_limits<double>::infinity();
    for (std::int64_t k = 1; k <= max_iterations; ++k) {
        const StepReport rep = accelerated_sinkhorn_step(pd, state);
        const Eigen::Index nn = prob.size();
        Matrix x_hat = Eigen::Map<const Matrix>(state.x_hat.data(), nn, nn);
        const TransportPlan current(x_hat);
        const double feas =
            marginal_l1_error(current, prob.row_marginal(), prob.col_marginal());
        const double gap = entropic_primal_value(prob, x_hat) +
                           ot_dual_value(prob, pd.to_dual_point(state.inner.x));
        trace.add({k, elapsed(), rep.f_x, feas, gap, state.inner.L, state.inner.A,
                   rep.grad_sqnorm});
        best_gap = std::min(best_gap, gap);

        // rounding is O(N^2); skip when feasibility blew up since the last check
        const bool check = rep.stationary || feas <= 10.0 * last_checked_feas;
        if (check) {
            last_checked_feas = feas;
            const TransportPlan rounded = round_to_polytope(current, r, c);
            const double round_gap =
                (cost.entries().array() * (rounded.matrix() - x_hat).array()).sum();
            best_round_gap = std::min(best_round_gap, round_gap);
            if (round_gap <= eps / 6.0 && gap <= eps / 6.0) {
                const double final_cost =
                    (cost.entries().array() * rounded.matrix().array()).sum();
                return {rounded, final_cost, std::move(trace), k};
            }
        }
        if (rep.stationary) break;
    }
    throw SolverError("approximate_ot: iteration budget exhausted (best gap " +
                      std::to_string(best_gap) + ", best rounding gap " +
                      std::to_string(best_round_gap) + ")");
}

}  // namespace otaccel
