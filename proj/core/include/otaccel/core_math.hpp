#pragma once

#include <Eigen/Dense>
#include <limits>

// Log-domain primitives shared by all solvers. Kernel arithmetic stays in
// log space end to end; plans are exponentiated only on demand.
namespace otaccel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(x_i)) with the usual max shift. All entries -inf maps to
// -inf (zero total mass). Empty input is an error.
double log_sum_exp(const Eigen::Ref<const Vector>& values);

// A probability vector on the simplex. Inputs are renormalized on
// construction (divide by sum) rather than rejected; `renormalized()`
// reports whether the input deviated from unit mass by more than 1e-12.
class Histogram {
public:
    explicit Histogram(Vector weights);

    const Vector& weights() const { return weights_; }
    Eigen::Index size() const { return weights_.size(); }
    double operator[](Eigen::Index i) const { return weights_[i]; }
    bool renormalized() const { return renormalized_; }
    double min_entry() const { return weights_.minCoeff(); }

    static Histogram uniform(Eigen::Index n);

private:
    Vector weights_;
    bool renormalized_ = false;
};

// Nonnegative cost matrix with its max entry cached.
class CostMatrix {
public:
    explicit CostMatrix(Matrix entries);

    const Matrix& entries() const { return entries_; }
    Eigen::Index size() const { return entries_.rows(); }
    double max_entry() const { return max_entry_; }

private:
    Matrix entries_;
    double max_entry_;
};

// Entrywise -C/gamma, the log of the Gibbs kernel exp(-C/gamma).
class LogKernel {
public:
    LogKernel(const CostMatrix& cost, double gamma);

    const Matrix& log_entries() const { return log_entries_; }
    double gamma() const { return gamma_; }
    Eigen::Index size() const { return log_entries_.rows(); }

private:
    Matrix log_entries_;
    double gamma_;
};

struct LogMarginals {
    Vector log_row_sums;
    Vector log_col_sums;
    double log_total;
};

// Row sums, column sums and total of B(u,v), with
// log B_ij = u_i + v_j + log_entries_ij, all in log domain.
LogMarginals log_marginals(const LogKernel& kernel,
                           const Eigen::Ref<const Vector>& u,
                           const Eigen::Ref<const Vector>& v);

// r_tilde = (1 - eps'/8)(r + eps'/(N(8 - eps')) 1). Guarantees
// min entry >= eps'/(8N) and ||r_tilde - r||_1 <= eps'/4.
Histogram smooth_marginals(const Histogram& r, double eps_prime);

}  // namespace otaccel
