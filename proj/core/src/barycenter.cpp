#include "otaccel/barycenter.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace otaccel {

namespace {

struct PerMeasureMarginals {
    std::vector<LogMarginals> lm;
};

PerMeasureMarginals all_marginals(const BarycenterProblem& prob, const Vector& point) {
    PerMeasureMarginals out;
    out.lm.reserve(prob.num_measures());
    for (int l = 0; l < prob.num_measures(); ++l)
        out.lm.push_back(
            log_marginals(prob.kernel(l), prob.u_block(point, l), prob.v_block(point, l)));
    return out;
}

}  // namespace

BarycenterProblem::BarycenterProblem(std::vector<Histogram> measures,
                                     std::vector<CostMatrix> costs, Vector weights,
                                     double gamma)
    : measures_(std::move(measures)), costs_(std::move(costs)),
      weights_(std::move(weights)), gamma_(gamma) {
    if (measures_.empty() || measures_.size() != costs_.size() ||
        static_cast<Eigen::Index>(measures_.size()) != weights_.size())
        throw std::invalid_argument("BarycenterProblem: m measures, costs, weights required");
    if ((weights_.array() <= 0.0).any())
        throw std::invalid_argument("BarycenterProblem: weights must be strictly positive");
    const double total = weights_.sum();
    if (std::abs(total - 1.0) > 1e-12) {
        weights_ /= total;
        weights_renormalized_ = true;
    }
    const Eigen::Index n = measures_[0].size();
    for (std::size_t l = 0; l < measures_.size(); ++l) {
        if (measures_[l].size() != n || costs_[l].size() != n)
            throw std::invalid_argument("BarycenterProblem: size mismatch");
        if (measures_[l].min_entry() <= 0.0)
            throw std::invalid_argument(
                "BarycenterProblem: measures must be strictly positive; smooth them first");
        kernels_.emplace_back(costs_[l], gamma_);
    }
}

double wb_dual_value(const BarycenterProblem& prob, const Vector& point) {
    double value = 0.0;
    for (int l = 0; l < prob.num_measures(); ++l) {
        const LogMarginals lm =
            log_marginals(prob.kernel(l), prob.u_block(point, l), prob.v_block(point, l));
        value += prob.weights()[l] *
                 (lm.log_total - prob.u_block(point, l).dot(prob.measure(l).weights()));
    }
    return prob.gamma() * value - prob.num_measures() * prob.gamma();
}

Vector weighted_v_sum(const BarycenterProblem& prob, const Vector& point) {
    Vector s = Vector::Zero(prob.support_size());
    for (int l = 0; l < prob.num_measures(); ++l)
        s += prob.weights()[l] * prob.v_block(point, l);
    return s;
}

void project_v_blocks(const BarycenterProblem& prob, Vector& point) {
    const Vector s = weighted_v_sum(prob, point);
    const double wsq = prob.weights().squaredNorm();
    const Eigen::Index n = prob.support_size();
    const int m = prob.num_measures();
    for (int l = 0; l < m; ++l)
        point.segment((m + l) * n, n) -= (prob.weights()[l] / wsq) * s;
}

Vector wb_dual_gradient(const BarycenterProblem& prob, const Vector& point) {
    const int m = prob.num_measures();
    const Eigen::Index n = prob.support_size();
    Vector g(prob.dual_dimension());
    for (int l = 0; l < m; ++l) {
        const LogMarginals lm =
            log_marginals(prob.kernel(l), prob.u_block(point, l), prob.v_block(point, l));
        const Vector row = (lm.log_row_sums.array() - lm.log_total).exp();
        const Vector col = (lm.log_col_sums.array() - lm.log_total).exp();
        g.segment(l * n, n) =
            prob.gamma() * prob.weights()[l] * (row - prob.measure(l).weights());
        g.segment((m + l) * n, n) = prob.gamma() * prob.weights()[l] * col;
    }
    // project the v-part onto the constraint subspace
    Vector s = Vector::Zero(n);
    for (int l = 0; l < m; ++l) s += prob.weights()[l] * g.segment((m + l) * n, n);
    const double wsq = prob.weights().squaredNorm();
    for (int l = 0; l < m; ++l)
        g.segment((m + l) * n, n) -= (prob.weights()[l] / wsq) * s;
    return g;
}

Vector ibp_u_update(const BarycenterProblem& prob, const Vector& point) {
    const Eigen::Index n = prob.support_size();
    Vector next = point;
    for (int l = 0; l < prob.num_measures(); ++l) {
        const LogMarginals lm =
            log_marginals(prob.kernel(l), prob.u_block(point, l), prob.v_block(point, l));
        next.segment(l * n, n) += prob.measure(l).weights().array().log().matrix() -
                                  lm.log_row_sums;
    }
    return next;
}

Vector ibp_v_update(const BarycenterProblem& prob, const Vector& point) {
    const int m = prob.num_measures();
    const Eigen::Index n = prob.support_size();
    const PerMeasureMarginals pm = all_marginals(prob, point);
    Vector weighted_lcs = Vector::Zero(n);
    for (int l = 0; l < m; ++l)
        weighted_lcs += prob.weights()[l] * pm.lm[l].log_col_sums;
    Vector next = point;
    for (int l = 0; l < m; ++l)
        next.segment((m + l) * n, n) += weighted_lcs - pm.lm[l].log_col_sums;
    project_v_blocks(prob, next);  // scrub rounding drift
    return next;
}

std::vector<TransportPlan> barycenter_plans(const BarycenterProblem& prob,
                                            const Vector& point) {
    std::vector<TransportPlan> plans;
    plans.reserve(prob.num_measures());
    const Eigen::Index n = prob.support_size();
    for (int l = 0; l < prob.num_measures(); ++l) {
        const auto u = prob.u_block(point, l);
        const auto v = prob.v_block(point, l);
        const LogMarginals lm = log_marginals(prob.kernel(l), u, v);
        Matrix plan(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                plan(i, j) = std::exp(u[i] + v[j] +
                                      prob.kernel(l).log_entries()(i, j) - lm.log_total);
        plans.emplace_back(std::move(plan));
    }
    return plans;
}

Histogram barycenter_estimate(const std::vector<TransportPlan>& plans,
                              const Vector& weights) {
    if (plans.empty()) throw std::invalid_argument("barycenter_estimate: no plans");
    Vector q = Vector::Zero(plans[0].size());
    for (std::size_t l = 0; l < plans.size(); ++l)
        q += weights[static_cast<Eigen::Index>(l)] * plans[l].col_marginals();
    return Histogram(std::move(q));
}

double barycenter_feasibility(const BarycenterProblem& prob,
                              const std::vector<TransportPlan>& plans) {
    Vector q_bar = Vector::Zero(prob.support_size());
    for (int l = 0; l < prob.num_measures(); ++l)
        q_bar += prob.weights()[l] * plans[l].col_marginals();
    double err = 0.0;
    for (int l = 0; l < prob.num_measures(); ++l) {
        err += prob.weights()[l] * (plans[l].col_marginals() - q_bar).lpNorm<1>();
        err += prob.weights()[l] *
               (plans[l].row_marginals() - prob.measure(l).weights()).lpNorm<1>();
    }
    return err;
}

IbpResult run_ibp(const BarycenterProblem& prob, const IbpStop& stop) {
    Vector point = prob.zero_dual();
    ConvergenceTrace trace;
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    std::vector<TransportPlan> plans = barycenter_plans(prob, point);
    trace.add({0, 0.0, wb_dual_value(prob, point),
               barycenter_feasibility(prob, plans), 0.0, 0.0, 0.0, 0.0});
    for (std::int64_t k = 1; k <= stop.max_sweeps; ++k) {
        point = ibp_u_update(prob, point);
        point = ibp_v_update(prob, point);
        plans = barycenter_plans(prob, point);
        const double feas = barycenter_feasibility(prob, plans);
        trace.add({k, elapsed(), wb_dual_value(prob, point), feas, 0.0, 0.0, 0.0, 0.0});
        if (feas <= stop.feasibility_tol) break;
    }
    return {std::move(point), std::move(plans), std::move(trace)};
}

// --- BarycenterDualProblem --------------------------------------------------

BarycenterDualProblem::BarycenterDualProblem(const BarycenterProblem& prob)
    : prob_(prob) {}

Vector BarycenterDualProblem::primal_from_dual(const Vector& lambda) const {
    const std::vector<TransportPlan> plans = barycenter_plans(prob_, lambda);
    const Eigen::Index n = prob_.support_size();
    Vector x(prob_.num_measures() * n * n);
    for (int l = 0; l < prob_.num_measures(); ++l) {
        Matrix m = plans[l].matrix();
        x.segment(l * n * n, n * n) = Eigen::Map<Vector>(m.data(), n * n);
    }
    return x;
}

double BarycenterDualProblem::primal_value(const Vector& x) const {
    const Eigen::Index n = prob_.support_size();
    double value = 0.0;
    for (int l = 0; l < prob_.num_measures(); ++l) {
        const Eigen::Map<const Matrix> plan(x.data() + l * n * n, n, n);
        double term = (prob_.cost(l).entries().array() * plan.array()).sum();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double p = plan(i, j);
                if (p > 0.0) term += prob_.gamma() * p * std::log(p);
            }
        value += prob_.weights()[l] * term;
    }
    // constant offset matching the dual's -m*gamma normalization
    return value + prob_.num_measures() * prob_.gamma();
}

Vector BarycenterDualProblem::constraint_residual(const Vector& x) const {
    const Eigen::Index n = prob_.support_size();
    const int m = prob_.num_measures();
    Vector res(2 * m * n);
    Vector q_bar = Vector::Zero(n);
    std::vector<Vector> cols(m);
    for (int l = 0; l < m; ++l) {
        const Eigen::Map<const Matrix> plan(x.data() + l * n * n, n, n);
        res.segment(l * n, n) = plan.rowwise().sum() - prob_.measure(l).weights();
        cols[l] = plan.colwise().sum().transpose();
        q_bar += prob_.weights()[l] * cols[l];
    }
    for (int l = 0; l < m; ++l) res.segment((m + l) * n, n) = cols[l] - q_bar;
    return res;
}

std::vector<TransportPlan> BarycenterDualProblem::unstack_plans(const Vector& x) const {
    const Eigen::Index n = prob_.support_size();
    std::vector<TransportPlan> plans;
    plans.reserve(prob_.num_measures());
    for (int l = 0; l < prob_.num_measures(); ++l) {
        Matrix plan = Eigen::Map<const Matrix>(x.data() + l * n * n, n, n);
        plans.emplace_back(std::move(plan));
    }
    return plans;
}

double BarycenterDualProblem::Objective::value(const Vector& x) const {
    return wb_dual_value(owner_.prob_, x);
}

Vector BarycenterDualProblem::Objective::gradient(const Vector& x) const {
    return wb_dual_gradient(owner_.prob_, x);
}

double BarycenterDualProblem::Objective::block_gradient_sqnorm(const Vector& x,
                                                               int block) const {
    const Vector g = gradient(x);
    const Eigen::Index half = owner_.prob_.num_measures() * owner_.prob_.support_size();
    return block == 0 ? g.head(half).squaredNorm() : g.tail(half).squaredNorm();
}

Vector BarycenterDualProblem::Objective::block_minimize(const Vector& x,
                                                        int block) const {
    return block == 0 ? ibp_u_update(owner_.prob_, x) : ibp_v_update(owner_.prob_, x);
}

AcceleratedIbpResult run_accelerated_ibp(const BarycenterProblem& prob,
                                         const StoppingRule& stop, double l0) {
    BarycenterDualProblem pd(prob);
    PrimalDualState state = PrimalDualState::init(prob.zero_dual(), l0);
    ConvergenceTrace trace;
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    trace.add({0, 0.0, pd.dual().value(state.inner.x), 0.0, 0.0,
               state.inner.L, state.inner.A, 0.0});
    for (std::int64_t k = 0; k < stop.max_iterations; ++k) {
        const StepReport rep = accelerated_ibp_step(pd, state);
        const Vector residual = pd.constraint_residual(state.x_hat);
        const double gap = pd.primal_value(state.x_hat) + pd.dual().value(state.inner.x);
        trace.add({state.inner.k, elapsed(), rep.f_x, residual.lpNorm<1>(), gap,
                   state.inner.L, state.inner.A, rep.grad_sqnorm});
        if (rep.stationary) break;
        if (stop.grad_sqnorm_tol > 0.0 && rep.grad_sqnorm <= stop.grad_sqnorm_tol) break;
        if (stop.predicate && stop.predicate(trace)) break;
    }
    return {std::move(state.inner.x), pd.unstack_plans(state.x_hat), std::move(trace)};
}

}  // namespace otaccel
