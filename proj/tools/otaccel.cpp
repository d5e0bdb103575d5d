// Command-line driver for the regularized OT and barycenter solvers.
//
// Subcommands:
//   ot          two-marginal transport (sinkhorn | aam-sinkhorn | apdagd-baseline)
//   barycenter  weighted barycenter of m measures (ibp | aam-ibp)
//   bench       seeded batch comparison across methods, long-format CSV
//   gradcheck   finite-difference validation of the dual gradients
//
// Exit codes: 0 success, 1 I/O failure, 2 iteration exhaustion, 3 bad config.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "otaccel/barycenter.hpp"
#include "otaccel/io.hpp"
#include "otaccel/oracle.hpp"
#include "otaccel/ot.hpp"
#include "otaccel/pdaam.hpp"

using namespace otaccel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitExhausted = 2;
constexpr int kExitConfig = 3;

struct CommonOpts {
    std::string method;
    std::string gamma = "auto";
    double eps = 1e-6;
    std::int64_t max_iters = 100000;
    double l0 = 1.0;
    std::uint64_t seed = 0;
    double smooth = 0.0;  // eps' floor smoothing; 0 disables
    std::string out;
    std::int64_t check_interval = 1;
    int workers = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--gamma", o.gamma, "regularization, or 'auto' for the eps-driven rule");
    cmd->add_option("--eps", o.eps, "target accuracy");
    cmd->add_option("--max-iters", o.max_iters, "iteration budget")->check(CLI::PositiveNumber);
    cmd->add_option("--l0", o.l0, "initial Lipschitz estimate")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "RNG seed for synthetic inputs");
    cmd->add_option("--smooth", o.smooth, "eps' marginal smoothing floor (0 = off)");
    cmd->add_option("--out", o.out, "trace CSV output path");
    cmd->add_option("--check-interval", o.check_interval,
                    "record every k-th trace row")->check(CLI::PositiveNumber);
    cmd->add_option("--workers", o.workers, "parallel instances (bench only)")
        ->check(CLI::PositiveNumber);
}

double parse_gamma(const CommonOpts& o, Eigen::Index n) {
    if (o.gamma == "auto") {
        if (!(o.eps > 0.0)) throw CLI::ValidationError("--eps must be > 0 with --gamma auto");
        return o.eps / (4.0 * std::log(static_cast<double>(n)));
    }
    const double g = std::stod(o.gamma);
    if (!(g > 0.0)) throw CLI::ValidationError("--gamma must be positive");
    return g;
}

int write_trace(const ConvergenceTrace& trace, const std::string& path,
                std::int64_t interval) {
    if (path.empty()) return kExitOk;
    std::ofstream out(path);
    if (!out) {
        std::fprintf(stderr, "error: cannot open %s for writing\n", path.c_str());
        return kExitIo;
    }
    if (interval <= 1) {
        trace.write_csv(out);
        return kExitOk;
    }
    ConvergenceTrace thinned;
    const auto& rows = trace.rows();
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (i % interval == 0 || i + 1 == rows.size()) thinned.add(rows[i]);
    thinned.write_csv(out);
    return kExitOk;
}

void print_kv(const char* key, double value) { std::printf("%s %.12g\n", key, value); }
void print_kv(const char* key, const std::string& value) {
    std::printf("%s %s\n", key, value.c_str());
}

Histogram load_measure(const std::string& path, double smooth) {
    Histogram h = load_histogram(path);
    if (smooth > 0.0) h = smooth_marginals(h, smooth);
    return h;
}

// --- ot ---------------------------------------------------------------------

struct OtArgs {
    std::string rows, cols, cost_path, plan_out;
    int grid_side = 0;
};

int run_ot(const CommonOpts& o, const OtArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    if (a.grid_side <= 0 && a.cost_path.empty())
        throw CLI::ValidationError("one of --cost or --grid is required");
    Histogram r = load_measure(a.rows, o.smooth);
    Histogram c = load_measure(a.cols, o.smooth);
    const CostMatrix cost = a.grid_side > 0
                                ? grid_cost(a.grid_side, GridMetric::sq_euclidean)
                                : load_cost_matrix(a.cost_path);
    if (r.size() != cost.size() || c.size() != cost.size())
        throw CLI::ValidationError("marginal/cost size mismatch");

    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const auto emit_plan = [&](const Matrix& plan) -> int {
        if (a.plan_out.empty()) return kExitOk;
        std::ofstream out(a.plan_out);
        if (!out) {
            std::fprintf(stderr, "error: cannot open %s\n", a.plan_out.c_str());
            return kExitIo;
        }
        write_matrix_csv(out, plan);
        return kExitOk;
    };

    if (o.gamma == "auto") {
        // eps-driven pipeline: smoothing, accelerated solve, rounding
        if (o.method != "aam-sinkhorn")
            throw CLI::ValidationError("--gamma auto requires --method aam-sinkhorn");
        try {
            const ApproxOTResult res =
                approximate_ot(cost, r, c, o.eps, o.max_iters, o.l0);
            print_kv("method", o.method);
            print_kv("cost", res.cost);
            print_kv("iterations", static_cast<double>(res.iterations));
            if (!res.trace.empty()) {
                print_kv("feasibility_l1", res.trace.back().feasibility_l1);
                print_kv("gap", res.trace.back().gap);
            }
            print_kv("seconds", elapsed());
            const int io = write_trace(res.trace, o.out, o.check_interval);
            if (io != kExitOk) return io;
            return emit_plan(res.plan.matrix());
        } catch (const SolverError& e) {
            std::fprintf(stderr, "exhausted: %s\n", e.what());
            return kExitExhausted;
        }
    }

    const double gamma = parse_gamma(o, cost.size());
    const EntropicOTProblem prob(cost, gamma, std::move(r), std::move(c));

    ConvergenceTrace trace;
    Matrix plan;
    double dual = 0.0, feas = 0.0;
    std::int64_t iterations = 0;
    if (o.method == "sinkhorn") {
        const SinkhornResult res = run_sinkhorn(prob, {o.max_iters, o.eps});
        trace = res.trace;
        plan = res.plan.matrix();
        dual = ot_dual_value(prob, res.point);
        feas = trace.back().feasibility_l1;
        iterations = trace.back().iteration;
    } else if (o.method == "aam-sinkhorn" || o.method == "apdagd-baseline") {
        OTDualProblem pd(prob);
        StoppingRule stop;
        stop.max_iterations = o.max_iters;
        const double target = o.eps;
        stop.predicate = [target](const ConvergenceTrace& t) {
            return t.back().feasibility_l1 <= target;
        };
        const PdaamResult res = run_pdaam(
            pd, pd.zero_point(), Variant::adaptive, stop, o.l0,
            o.method == "apdagd-baseline" ? PdMethod::apdagd_baseline : PdMethod::pdaam);
        trace = res.trace;
        plan = Eigen::Map<const Matrix>(res.x_hat.data(), cost.size(), cost.size());
        dual = pd.dual().value(res.eta);
        feas = trace.back().feasibility_l1;
        iterations = trace.back().iteration;
        print_kv("gap", trace.back().gap);
    } else {
        throw CLI::ValidationError("unknown --method '" + o.method + "'");
    }

    print_kv("method", o.method);
    print_kv("gamma", gamma);
    print_kv("dual", dual);
    print_kv("cost", (cost.entries().array() * plan.array()).sum());
    print_kv("feasibility_l1", feas);
    print_kv("iterations", static_cast<double>(iterations));
    print_kv("seconds", elapsed());
    const int io = write_trace(trace, o.out, o.check_interval);
    if (io != kExitOk) return io;
    const int pio = emit_plan(plan);
    if (pio != kExitOk) return pio;
    return feas <= o.eps ? kExitOk : kExitExhausted;
}

// --- barycenter -------------------------------------------------------------

struct WbArgs {
    std::vector<std::string> measures;
    std::string cost_path, weights_csv, bary_out;
    int grid_side = 0;
};

int run_barycenter(const CommonOpts& o, const WbArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    if (a.measures.size() < 2)
        throw CLI::ValidationError("need at least two --measure inputs");
    if (a.grid_side <= 0 && a.cost_path.empty())
        throw CLI::ValidationError("one of --cost or --grid is required");
    std::vector<Histogram> measures;
    for (const std::string& path : a.measures)
        measures.push_back(load_measure(path, o.smooth > 0.0 ? o.smooth : 1e-6));
    const CostMatrix cost = a.grid_side > 0
                                ? grid_cost(a.grid_side, GridMetric::sq_euclidean)
                                : load_cost_matrix(a.cost_path);
    const int m = static_cast<int>(measures.size());
    for (const Histogram& h : measures)
        if (h.size() != cost.size())
            throw CLI::ValidationError("measure/cost size mismatch");

    Vector weights = Vector::Constant(m, 1.0 / m);
    if (!a.weights_csv.empty()) {
        std::stringstream ss(a.weights_csv);
        std::string tok;
        std::vector<double> ws;
        while (std::getline(ss, tok, ',')) ws.push_back(std::stod(tok));
        if (static_cast<int>(ws.size()) != m)
            throw CLI::ValidationError("--weights count must match --measure count");
        weights = Eigen::Map<Vector>(ws.data(), m);
    }

    const double gamma = parse_gamma(o, cost.size());
    std::vector<CostMatrix> costs(m, cost);
    const BarycenterProblem prob(std::move(measures), std::move(costs), weights, gamma);
    if (prob.weights_renormalized())
        std::fprintf(stderr, "warning: weights renormalized to sum 1\n");

    ConvergenceTrace trace;
    std::vector<TransportPlan> plans;
    Vector point;
    if (o.method == "ibp") {
        IbpResult res = run_ibp(prob, {o.max_iters, o.eps});
        trace = std::move(res.trace);
        plans = std::move(res.plans);
        point = std::move(res.point);
    } else if (o.method == "aam-ibp") {
        StoppingRule stop;
        stop.max_iterations = o.max_iters;
        const double target = o.eps;
        stop.predicate = [target](const ConvergenceTrace& t) {
            return t.back().feasibility_l1 <= target;
        };
        AcceleratedIbpResult res = run_accelerated_ibp(prob, stop, o.l0);
        trace = std::move(res.trace);
        plans = std::move(res.plans);
        point = std::move(res.point);
    } else {
        throw CLI::ValidationError("unknown --method '" + o.method + "'");
    }

    const double feas = barycenter_feasibility(prob, plans);
    const Histogram estimate = barycenter_estimate(plans, prob.weights());
    print_kv("method", o.method);
    print_kv("gamma", gamma);
    print_kv("dual", wb_dual_value(prob, point));
    print_kv("feasibility", feas);
    print_kv("iterations", static_cast<double>(trace.back().iteration));
    print_kv("seconds", std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0).count());
    for (int l = 0; l < m; ++l) {
        const std::string key = "row_error_" + std::to_string(l);
        print_kv(key.c_str(),
                 (plans[l].row_marginals() - prob.measure(l).weights()).lpNorm<1>());
    }
    if (!a.bary_out.empty()) {
        std::ofstream out(a.bary_out);
        if (!out) {
            std::fprintf(stderr, "error: cannot open %s\n", a.bary_out.c_str());
            return kExitIo;
        }
        write_matrix_csv(out, estimate.weights().transpose());
    }
    const int io = write_trace(trace, o.out, o.check_interval);
    if (io != kExitOk) return io;
    return feas <= o.eps ? kExitOk : kExitExhausted;
}

// --- bench ------------------------------------------------------------------

Histogram bench_image(std::mt19937& rng, int side) {
    std::uniform_real_distribution<double> pos(0.0, side - 1.0);
    std::uniform_real_distribution<double> width(0.8, 2.0);
    Vector img = Vector::Constant(side * side, 1e-3);
    for (int bump = 0; bump < 2; ++bump) {
        const double cx = pos(rng), cy = pos(rng), s = width(rng);
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j) {
                const double d2 = (i - cx) * (i - cx) + (j - cy) * (j - cy);
                img[i * side + j] += std::exp(-d2 / (2.0 * s * s));
            }
    }
    return Histogram(std::move(img));
}

struct BenchArgs {
    int count = 5;
    int side = 8;
};

struct BenchRun {
    std::string method;
    ConvergenceTrace trace;
};

std::vector<BenchRun> bench_instance(const CommonOpts& o, int side,
                                     std::uint64_t instance_seed) {
    std::mt19937 rng(static_cast<std::uint32_t>(instance_seed));
    const Histogram r = smooth_marginals(bench_image(rng, side), 0.01);
    const Histogram c = smooth_marginals(bench_image(rng, side), 0.01);
    const CostMatrix cost = grid_cost(side, GridMetric::sq_euclidean);
    const double gamma = o.gamma == "auto" ? 2e-3 : std::stod(o.gamma);
    const EntropicOTProblem prob(cost, gamma, r, c);

    std::vector<BenchRun> runs;
    {
        const SinkhornResult res = run_sinkhorn(prob, {o.max_iters, o.eps});
        runs.push_back({"sinkhorn", res.trace});
    }
    const double target = o.eps;
    StoppingRule stop;
    stop.max_iterations = o.max_iters;
    stop.predicate = [target](const ConvergenceTrace& t) {
        return t.back().feasibility_l1 <= target;
    };
    OTDualProblem pd(prob);
    {
        PdaamResult res = run_pdaam(pd, pd.zero_point(), Variant::adaptive, stop, o.l0);
        runs.push_back({"aam-sinkhorn", std::move(res.trace)});
    }
    {
        PdaamResult res = run_pdaam(pd, pd.zero_point(), Variant::adaptive, stop, o.l0,
                                    PdMethod::apdagd_baseline);
        runs.push_back({"apdagd-baseline", std::move(res.trace)});
    }
    return runs;
}

int run_bench(const CommonOpts& o, const BenchArgs& a) {
    if (a.count < 1) throw CLI::ValidationError("--count must be >= 1");

    std::vector<std::vector<BenchRun>> results(a.count);
    if (o.workers <= 1) {
        for (int i = 0; i < a.count; ++i)
            results[i] = bench_instance(o, a.side, o.seed + i);
    } else {
        std::vector<std::future<std::vector<BenchRun>>> futures;
        futures.reserve(a.count);
        for (int i = 0; i < a.count; ++i)
            futures.push_back(std::async(std::launch::async, bench_instance, o,
                                         a.side, o.seed + i));
        for (int i = 0; i < a.count; ++i) results[i] = futures[i].get();
    }

    std::ostream* csv = nullptr;
    std::ofstream file;
    std::ostringstream null_sink;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) {
            std::fprintf(stderr, "error: cannot open %s\n", o.out.c_str());
            return kExitIo;
        }
        csv = &file;
    } else {
        csv = &null_sink;
    }
    // seconds deliberately omitted so identical seeds give identical bytes
    *csv << "instance,method,iter,dual,feas_l1,gap,L,A\n";
    for (int i = 0; i < a.count; ++i)
        for (const BenchRun& run : results[i])
            for (std::size_t j = 0; j < run.trace.size(); ++j) {
                if (j % o.check_interval != 0 && j + 1 != run.trace.size()) continue;
                const TraceRow& row = run.trace.rows()[j];
                *csv << i << ',' << run.method << ',' << row.iteration << ','
                     << row.dual_value << ',' << row.feasibility_l1 << ','
                     << row.gap << ',' << row.lipschitz_estimate << ','
                     << row.accumulator << '\n';
            }

    // per-method iteration statistics at the target accuracy
    for (const char* method : {"sinkhorn", "aam-sinkhorn", "apdagd-baseline"}) {
        double mean = 0.0, sq = 0.0;
        for (int i = 0; i < a.count; ++i)
            for (const BenchRun& run : results[i])
                if (run.method == method) {
                    const double it = static_cast<double>(run.trace.back().iteration);
                    mean += it;
                    sq += it * it;
                }
        mean /= a.count;
        const double sd = std::sqrt(std::max(0.0, sq / a.count - mean * mean));
        std::printf("%s_iterations_mean %.6g\n", method, mean);
        std::printf("%s_iterations_std %.6g\n", method, sd);
    }

    for (int i = 0; i < a.count; ++i)
        for (const BenchRun& run : results[i])
            if (run.trace.back().feasibility_l1 > o.eps) return kExitExhausted;
    return kExitOk;
}

// --- gradcheck --------------------------------------------------------------

int run_gradcheck(const CommonOpts& o, int trials) {
    std::mt19937 rng(static_cast<std::uint32_t>(o.seed + 1));
    std::normal_distribution<double> normal(0.0, 0.5);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    double worst_ot = 0.0, worst_wb = 0.0;

    for (int trial = 0; trial < trials; ++trial) {
        const Eigen::Index n = 2 + trial % 4;
        Matrix cm(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) cm(i, j) = i == j ? 0.0 : unif(rng);
        Vector rw(n), cw(n);
        for (Eigen::Index i = 0; i < n; ++i) { rw[i] = unif(rng); cw[i] = unif(rng); }
        const EntropicOTProblem prob(CostMatrix(cm), 0.3, Histogram(rw), Histogram(cw));
        Vector point(2 * n);
        for (Eigen::Index i = 0; i < 2 * n; ++i) point[i] = normal(rng);
        const auto f = [&](const Vector& x) {
            return ot_dual_value(prob, {x.head(n), x.tail(n)});
        };
        const Vector fd = finite_difference_gradient(f, point);
        const auto [gu, gv] = ot_dual_gradient(prob, {point.head(n), point.tail(n)});
        Vector g(2 * n);
        g << gu, gv;
        worst_ot = std::max(worst_ot, (g - fd).norm() / (1.0 + g.norm()));
    }

    for (int trial = 0; trial < trials; ++trial) {
        const int m = 2 + trial % 2;
        const Eigen::Index n = 3;
        std::vector<Histogram> measures;
        std::vector<CostMatrix> costs;
        for (int l = 0; l < m; ++l) {
            Vector w(n);
            for (Eigen::Index i = 0; i < n; ++i) w[i] = unif(rng);
            measures.emplace_back(w);
            Matrix cm(n, n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) cm(i, j) = i == j ? 0.0 : unif(rng);
            costs.emplace_back(cm);
        }
        const BarycenterProblem prob(std::move(measures), std::move(costs),
                                     Vector::Constant(m, 1.0 / m), 0.4);
        Vector point(prob.dual_dimension());
        for (Eigen::Index i = 0; i < point.size(); ++i) point[i] = normal(rng);
        project_v_blocks(prob, point);
        Vector dir(prob.dual_dimension());
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = normal(rng);
        project_v_blocks(prob, dir);
        dir /= dir.norm();
        const double h = 1e-6;
        const double fd = (wb_dual_value(prob, point + h * dir) -
                           wb_dual_value(prob, point - h * dir)) /
                          (2.0 * h);
        const double analytic = wb_dual_gradient(prob, point).dot(dir);
        worst_wb = std::max(worst_wb,
                            std::abs(analytic - fd) / (1.0 + std::abs(analytic)));
    }

    print_kv("ot_gradient_max_rel_error", worst_ot);
    print_kv("wb_gradient_max_rel_error", worst_wb);
    return worst_ot <= 1e-5 && worst_wb <= 1e-5 ? kExitOk : kExitExhausted;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"accelerated solvers for entropic optimal transport"};
    app.require_subcommand(1);

    CommonOpts ot_opts, wb_opts, bench_opts, grad_opts;
    OtArgs ot_args;
    WbArgs wb_args;
    BenchArgs bench_args;
    int grad_trials = 100;

    CLI::App* ot_cmd = app.add_subcommand("ot", "two-marginal optimal transport");
    ot_opts.method = "aam-sinkhorn";
    ot_cmd->add_option("--method", ot_opts.method,
                       "sinkhorn | aam-sinkhorn | apdagd-baseline");
    ot_cmd->add_option("--rows", ot_args.rows, "row marginal (CSV or PGM)")->required();
    ot_cmd->add_option("--cols", ot_args.cols, "column marginal")->required();
    ot_cmd->add_option("--cost", ot_args.cost_path, "cost matrix CSV");
    ot_cmd->add_option("--grid", ot_args.grid_side, "use a pixel-grid cost of this side");
    ot_cmd->add_option("--plan-out", ot_args.plan_out, "write the final plan CSV here");
    add_common(ot_cmd, ot_opts);

    CLI::App* wb_cmd = app.add_subcommand("barycenter", "weighted barycenter");
    wb_opts.method = "aam-ibp";
    wb_opts.gamma = "0.1";
    wb_cmd->add_option("--method", wb_opts.method, "ibp | aam-ibp");
    wb_cmd->add_option("--measure", wb_args.measures, "input measure (repeatable)")
        ->required();
    wb_cmd->add_option("--cost", wb_args.cost_path, "shared cost matrix CSV");
    wb_cmd->add_option("--grid", wb_args.grid_side, "use a pixel-grid cost");
    wb_cmd->add_option("--weights", wb_args.weights_csv, "comma-separated weights");
    wb_cmd->add_option("--bary-out", wb_args.bary_out, "write the barycenter CSV here");
    add_common(wb_cmd, wb_opts);

    CLI::App* bench_cmd = app.add_subcommand("bench", "seeded method comparison");
    bench_cmd->add_option("--count", bench_args.count, "number of instances");
    bench_cmd->add_option("--side", bench_args.side, "image side length");
    bench_opts.eps = 1e-3;
    add_common(bench_cmd, bench_opts);

    CLI::App* grad_cmd = app.add_subcommand("gradcheck", "finite-difference checks");
    grad_cmd->add_option("--trials", grad_trials, "points per objective");
    add_common(grad_cmd, grad_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ot_cmd->parsed()) return run_ot(ot_opts, ot_args);
        if (wb_cmd->parsed()) return run_barycenter(wb_opts, wb_args);
        if (bench_cmd->parsed()) return run_bench(bench_opts, bench_args);
        if (grad_cmd->parsed()) return run_gradcheck(grad_opts, grad_trials);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "invalid config: %s\n", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kExitExhausted;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid config: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitConfig;
}
