#include "otaccel/io.hpp"
#include "otaccel/trace.hpp"

#include <fstream>
#include <sstream>

namespace otaccel {

void ConvergenceTrace::add(TraceRow row) { rows_.push_back(std::move(row)); }

void ConvergenceTrace::write_csv(std::ostream& os) const {
    os << "iter,seconds,dual,feas_l1,gap,L,A\n";
    for (const TraceRow& r : rows_) {
        os << r.iteration << ',' << r.elapsed_seconds << ',' << r.dual_value << ','
           << r.feasibility_l1 << ',' << r.gap << ',' << r.lipschitz_estimate << ','
           << r.accumulator << '\n';
    }
}

namespace {

std::vector<double> parse_csv_values(std::istream& in, const std::string& path) {
    std::vector<double> values;
    std::string token;
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        while (std::getline(ls, token, ',')) {
            // trim whitespace
            const auto begin = token.find_first_not_of(" \t\r");
            if (begin == std::string::npos) continue;
            const auto end = token.find_last_not_of(" \t\r");
            token = token.substr(begin, end - begin + 1);
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(token, &used);
            } catch (const std::exception&) {
                throw IoError(path + ": cannot parse '" + token + "' as a number");
            }
            if (used != token.size())
                throw IoError(path + ": trailing characters in '" + token + "'");
            values.push_back(v);
        }
    }
    return values;
}

std::vector<double> read_pgm(std::ifstream& in, const std::string& path) {
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5") throw IoError(path + ": not a P2/P5 PGM file");
    // header tokens, skipping comment lines
    auto next_int = [&]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return std::stoi(tok);
        }
        throw IoError(path + ": truncated PGM header");
    };
    const int width = next_int();
    const int height = next_int();
    const int maxval = next_int();
    if (width <= 0 || height <= 0 || maxval <= 0)
        throw IoError(path + ": bad PGM dimensions");
    std::vector<double> pixels;
    pixels.reserve(static_cast<std::size_t>(width) * height);
    if (magic == "P2") {
        for (long i = 0; i < static_cast<long>(width) * height; ++i) {
            int v;
            if (!(in >> v)) throw IoError(path + ": truncated P2 pixel data");
            pixels.push_back(static_cast<double>(v));
        }
    } else {
        if (maxval > 255) throw IoError(path + ": 16-bit P5 not supported");
        in.get();  // single whitespace after maxval
        for (long i = 0; i < static_cast<long>(width) * height; ++i) {
            const int v = in.get();
            if (v == EOF) throw IoError(path + ": truncated P5 pixel data");
            pixels.push_back(static_cast<double>(v));
        }
    }
    return pixels;
}

}  // namespace

Histogram load_histogram(const std::string& path, HistogramFormat format,
                         std::optional<double> smooth_eps) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open");
    if (format == HistogramFormat::auto_detect) {
        const int c = in.peek();
        format = c == 'P' ? HistogramFormat::pgm : HistogramFormat::csv;
    }
    std::vector<double> values;
    if (format == HistogramFormat::pgm) {
        values = read_pgm(in, path);
    } else {
        values = parse_csv_values(in, path);
    }
    if (values.empty()) throw IoError(path + ": no values");
    Vector w(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 0.0) throw IoError(path + ": negative value");
        w[static_cast<Eigen::Index>(i)] = values[i];
    }
    if (w.sum() <= 0.0) throw IoError(path + ": all-zero mass");
    Histogram h{std::move(w)};
    if (smooth_eps) h = smooth_marginals(h, *smooth_eps);
    return h;
}

CostMatrix load_cost_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        std::string token;
        while (std::getline(ls, token, ',')) {
            try {
                row.push_back(std::stod(token));
            } catch (const std::exception&) {
                throw IoError(path + ": cannot parse '" + token + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": empty cost matrix");
    const std::size_t n = rows.size();
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n)
            throw IoError(path + ": cost matrix must be square (row " +
                          std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                          " entries, expected " + std::to_string(n) + ")");
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return CostMatrix(std::move(m));
}

CostMatrix grid_cost(int side, GridMetric metric) {
    if (side < 1) throw std::invalid_argument("grid_cost: side >= 1");
    const int n = side * side;
    Matrix m(n, n);
    for (int a = 0; a < n; ++a) {
        const int ai = a / side, aj = a % side;
        for (int b = 0; b < n; ++b) {
            const int bi = b / side, bj = b % side;
            const double di = ai - bi, dj = aj - bj;
            m(a, b) = metric == GridMetric::sq_euclidean
                          ? di * di + dj * dj
                          : std::abs(di) + std::abs(dj);
        }
    }
    const double max = m.maxCoeff();
    if (max > 0.0) m /= max;
    return CostMatrix(std::move(m));
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << m(i, j);
        }
        os << '\n';
    }
}

}  // namespace otaccel
