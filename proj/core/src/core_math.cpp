#include "otaccel/core_math.hpp"

#include <cmath>
#include <stdexcept>

namespace otaccel {

double log_sum_exp(const Eigen::Ref<const Vector>& values) {
    if (values.size() == 0)
        throw std::invalid_argument("log_sum_exp: empty input");
    const double m = values.maxCoeff();
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        s += std::exp(values[i] - m);
    return m + std::log(s);
}

Histogram::Histogram(Vector weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0)
        throw std::invalid_argument("Histogram: empty weight vector");
    if ((weights_.array() < 0.0).any())
        throw std::invalid_argument("Histogram: negative entry");
    const double total = weights_.sum();
    if (!(total > 0.0))
        throw std::invalid_argument("Histogram: zero total mass");
    if (std::abs(total - 1.0) > 1e-12) {
        weights_ /= total;
        renormalized_ = true;
    }
}

Histogram Histogram::uniform(Eigen::Index n) {
    return Histogram(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols())
        throw std::invalid_argument("CostMatrix: must be square");
    if ((entries_.array() < 0.0).any())
        throw std::invalid_argument("CostMatrix: negative entry");
    max_entry_ = entries_.maxCoeff();
}

LogKernel::LogKernel(const CostMatrix& cost, double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("LogKernel: gamma must be positive");
    log_entries_ = -cost.entries() / gamma;
}

LogMarginals log_marginals(const LogKernel& kernel,
                           const Eigen::Ref<const Vector>& u,
                           const Eigen::Ref<const Vector>& v) {
    const Eigen::Index n = kernel.size();
    if (u.size() != n || v.size() != n)
        throw std::invalid_argument("log_marginals: dimension mismatch");
    LogMarginals out;
    out.log_row_sums.resize(n);
    out.log_col_sums.resize(n);
    // log B_ij = u_i + v_j + logK_ij
    Vector buf(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        buf = kernel.log_entries().row(i).transpose() + v;
        out.log_row_sums[i] = u[i] + log_sum_exp(buf);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        buf = kernel.log_entries().col(j) + u;
        out.log_col_sums[j] = v[j] + log_sum_exp(buf);
    }
    out.log_total = log_sum_exp(out.log_row_sums);
    return out;
}

Histogram smooth_marginals(const Histogram& r, double eps_prime) {
    if (!(eps_prime > 0.0 && eps_prime < 8.0))
        throw std::invalid_argument("smooth_marginals: eps' must be in (0,8)");
    const double n = static_cast<double>(r.size());
    const double scale = 1.0 - eps_prime / 8.0;
    const double floor = eps_prime / (n * (8.0 - eps_prime));
    Vector w = scale * (r.weights().array() + floor);
    return Histogram(std::move(w));
}

}  // namespace otaccel
