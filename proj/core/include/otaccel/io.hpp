#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "otaccel/core_math.hpp"

namespace otaccel {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class HistogramFormat { csv, pgm, auto_detect };

// CSV: floats separated by commas and/or newlines. PGM: magic P2 (plain)
// or P5 (raw, maxval <= 255), pixels flattened row-major. Values are
// normalized to sum 1; optional floor smoothing applies smooth_marginals.
Histogram load_histogram(const std::string& path,
                         HistogramFormat format = HistogramFormat::auto_detect,
                         std::optional<double> smooth_eps = std::nullopt);

// N rows x N columns of comma-separated nonnegative floats.
CostMatrix load_cost_matrix(const std::string& path);

enum class GridMetric { sq_euclidean, l1 };

// Ground cost between pixels of a side x side image grid, flattened
// row-major; normalized so the max entry is 1.
CostMatrix grid_cost(int side, GridMetric metric);

void write_matrix_csv(std::ostream& os, const Matrix& m);

}  // namespace otaccel
