#pragma once

// Seeded instance generators shared by the unit and acceptance suites.

#include <random>
#include <utility>
#include <vector>

#include "otaccel/aam.hpp"
#include "otaccel/core_math.hpp"

namespace testutil {

using otaccel::Matrix;
using otaccel::Vector;

// f(x) = 1/2 x^T H x - b^T x with H block-diagonal SPD, so each block
// subproblem decouples and block_minimize is exact.
class BlockQuadratic final : public otaccel::BlockObjective {
public:
    BlockQuadratic(Matrix h, Vector b,
                   std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks)
        : h_(std::move(h)), b_(std::move(b)), blocks_(std::move(blocks)) {}

    int num_blocks() const override { return static_cast<int>(blocks_.size()); }
    Eigen::Index dimension() const override { return b_.size(); }
    double value(const Vector& x) const override {
        return 0.5 * x.dot(h_ * x) - b_.dot(x);
    }
    Vector gradient(const Vector& x) const override { return h_ * x - b_; }
    double block_gradient_sqnorm(const Vector& x, int block) const override {
        const auto [off, len] = blocks_[block];
        return gradient(x).segment(off, len).squaredNorm();
    }
    Vector block_minimize(const Vector& x, int block) const override {
        const auto [off, len] = blocks_[block];
        Vector next = x;
        next.segment(off, len) =
            h_.block(off, off, len, len).ldlt().solve(b_.segment(off, len));
        return next;
    }

    double lipschitz() const {
        return Eigen::SelfAdjointEigenSolver<Matrix>(h_).eigenvalues().maxCoeff();
    }
    Vector minimizer() const { return h_.ldlt().solve(b_); }

private:
    Matrix h_;
    Vector b_;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks_;
};

inline BlockQuadratic random_quadratic(std::mt19937& rng, int max_dim = 20) {
    std::uniform_int_distribution<int> dim_dist(4, max_dim);
    std::uniform_int_distribution<int> nb_dist(2, 4);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int dim = dim_dist(rng);
    const int nb = std::min(nb_dist(rng), dim);
    // contiguous partition with nonempty blocks
    std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;
    Eigen::Index off = 0;
    for (int i = 0; i < nb; ++i) {
        const Eigen::Index len = dim / nb + (i < dim % nb ? 1 : 0);
        blocks.emplace_back(off, len);
        off += len;
    }
    Matrix h = Matrix::Zero(dim, dim);
    for (const auto& [o, len] : blocks) {
        Matrix m(len, len);
        for (Eigen::Index i = 0; i < len; ++i)
            for (Eigen::Index j = 0; j < len; ++j) m(i, j) = normal(rng);
        h.block(o, o, len, len) =
            m * m.transpose() + 0.5 * Matrix::Identity(len, len);
    }
    Vector b(dim);
    for (int i = 0; i < dim; ++i) b[i] = normal(rng);
    return BlockQuadratic(std::move(h), std::move(b), std::move(blocks));
}

// Separable f(x) = sum_i (d_i/2) x_i^2 - c_i cos(x_i), two halves as blocks.
// Nonconvex when some c_i > d_i. Smooth with L = max(d_i + c_i); a valid
// global lower bound is -sum_i c_i.
class RippleObjective final : public otaccel::BlockObjective {
public:
    RippleObjective(Vector d, Vector c) : d_(std::move(d)), c_(std::move(c)) {
        half_ = d_.size() / 2;
    }

    int num_blocks() const override { return 2; }
    Eigen::Index dimension() const override { return d_.size(); }
    double value(const Vector& x) const override {
        double f = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            f += 0.5 * d_[i] * x[i] * x[i] - c_[i] * std::cos(x[i]);
        return f;
    }
    Vector gradient(const Vector& x) const override {
        Vector g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            g[i] = d_[i] * x[i] + c_[i] * std::sin(x[i]);
        return g;
    }
    double block_gradient_sqnorm(const Vector& x, int block) const override {
        const Vector g = gradient(x);
        return block == 0 ? g.head(half_).squaredNorm()
                          : g.tail(g.size() - half_).squaredNorm();
    }
    Vector block_minimize(const Vector& x, int block) const override {
        Vector next = x;
        const Eigen::Index lo = block == 0 ? 0 : half_;
        const Eigen::Index hi = block == 0 ? half_ : x.size();
        for (Eigen::Index i = lo; i < hi; ++i)
            next[i] = coordinate_argmin(d_[i], c_[i]);
        return next;
    }

    double lipschitz() const { return (d_ + c_).maxCoeff(); }
    double lower_bound() const { return -c_.sum(); }

private:
    // Global argmin of h(t) = (d/2)t^2 - c cos t: any minimizer satisfies
    // |t| <= c/d, so scan that interval and polish with Newton.
    static double coordinate_argmin(double d, double c) {
        const double radius = c / d + 1.0;
        double best_t = 0.0, best_h = -c;
        const int grid = 2000;
        for (int s = -grid; s <= grid; ++s) {
            const double t = radius * s / grid;
            const double h = 0.5 * d * t * t - c * std::cos(t);
            if (h < best_h) { best_h = h; best_t = t; }
        }
        double t = best_t;
        for (int it = 0; it < 60; ++it) {
            const double g = d * t + c * std::sin(t);
            const double hess = d + c * std::cos(t);
            if (hess <= 0.0) break;
            const double step = g / hess;
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        const double h = 0.5 * d * t * t - c * std::cos(t);
        return h <= best_h ? t : best_t;
    }

    Vector d_;
    Vector c_;
    Eigen::Index half_;
};

inline RippleObjective random_ripple(std::mt19937& rng) {
    std::uniform_int_distribution<int> dim_dist(4, 12);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int dim = dim_dist(rng);
    Vector d(dim), c(dim);
    for (int i = 0; i < dim; ++i) {
        d[i] = 0.5 + unif(rng);
        c[i] = 0.5 + 2.0 * unif(rng);  // mostly c_i > d_i: nonconvex coordinates
    }
    return RippleObjective(std::move(d), std::move(c));
}

inline otaccel::Histogram random_histogram(std::mt19937& rng, Eigen::Index n,
                                           double floor = 0.05) {
    std::uniform_real_distribution<double> unif(floor, 1.0);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = unif(rng);
    return otaccel::Histogram(std::move(w));
}

inline otaccel::CostMatrix random_cost(std::mt19937& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) c(i, j) = i == j ? 0.0 : unif(rng);
    return otaccel::CostMatrix(std::move(c));
}

}  // namespace testutil
