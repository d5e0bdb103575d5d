#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace otaccel {

// One record per accepted iteration. `feasibility_l1` and `gap` are only
// meaningful for primal-dual runs and stay at 0 otherwise.
struct TraceRow {
    std::int64_t iteration = 0;
    double elapsed_seconds = 0.0;
    double dual_value = 0.0;
    double feasibility_l1 = 0.0;
    double gap = 0.0;
    double lipschitz_estimate = 0.0;
    double accumulator = 0.0;
    double grad_sqnorm = 0.0;  // in-memory only, not part of the CSV schema
};

class ConvergenceTrace {
public:
    void add(TraceRow row);
    const std::vector<TraceRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }
    std::size_t size() const { return rows_.size(); }
    const TraceRow& back() const { return rows_.back(); }

    // Header `iter,seconds,dual,feas_l1,gap,L,A` plus one line per row.
    void write_csv(std::ostream& os) const;

private:
    std::vector<TraceRow> rows_;
};

}  // namespace otaccel
