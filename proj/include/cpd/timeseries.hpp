#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpd/error.hpp"
#include "cpd/format.hpp"

namespace cpd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Read-only view of N consecutive samples (rows) of a d-dimensional series.
// Accepts a full matrix or a contiguous row block without copying.
using SampleBlock = Eigen::Ref<const Matrix>;

class SeriesSegment;

// Ordered d-dimensional samples of a monitored metric. Rows are time, columns
// are dimensions. Immutable once constructed.
class TimeSeries {
public:
    explicit TimeSeries(Matrix values, double period = 1.0, std::string label = {})
        : values_(std::move(values)), period_(period), label_(std::move(label)) {
        if (values_.rows() < 1 || values_.cols() < 1) {
            throw std::invalid_argument("TimeSeries: needs at least one sample and one dimension");
        }
        if (!values_.allFinite()) {
            throw std::invalid_argument("TimeSeries: values must be finite");
        }
        if (!(period_ > 0.0) || !std::isfinite(period_)) {
            throw std::invalid_argument("TimeSeries: period must be positive");
        }
    }

    static TimeSeries from_scalars(const std::vector<double>& xs, double period = 1.0,
                                   std::string label = {}) {
        Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            m(static_cast<Eigen::Index>(i), 0) = xs[i];
        }
        return TimeSeries(std::move(m), period, std::move(label));
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    double period() const noexcept { return period_; }
    const std::string& label() const noexcept { return label_; }
    const Matrix& values() const noexcept { return values_; }

    /// Sample at 1-based time index n.
    Vector sample(std::size_t n) const {
        check_index(n);
        return values_.row(static_cast<Eigen::Index>(n - 1)).transpose();
    }

    /// Time stamp of index n relative to the series origin.
    double time_of(std::size_t n) const {
        check_index(n);
        return static_cast<double>(n - 1) * period_;
    }

    /// Copy of dimension j (1-based).
    std::vector<double> column(std::size_t j = 1) const {
        if (j < 1 || j > dim()) {
            throw std::out_of_range("TimeSeries::column: dimension out of range");
        }
        const auto c = values_.col(static_cast<Eigen::Index>(j - 1));
        return {c.data(), c.data() + c.size()};
    }

    TimeSeries reversed() const {
        return TimeSeries(values_.colwise().reverse(), period_, label_);
    }

    inline SeriesSegment whole() const;
    inline SeriesSegment segment(std::size_t lo, std::size_t hi) const;

private:
    void check_index(std::size_t n) const {
        if (n < 1 || n > size()) {
            throw std::out_of_range("TimeSeries: index out of range");
        }
    }

    Matrix values_;
    double period_;
    std::string label_;
};

// Inclusive 1-based index range [lo, hi] of a parent series. The parent must
// outlive the segment.
class SeriesSegment {
public:
    SeriesSegment(const TimeSeries& parent, std::size_t lo, std::size_t hi)
        : parent_(&parent), lo_(lo), hi_(hi) {
        if (lo < 1 || lo > hi || hi > parent.size()) {
            throw std::out_of_range("SeriesSegment: need 1 <= lo <= hi <= N");
        }
    }

    const TimeSeries& parent() const noexcept { return *parent_; }
    std::size_t lo() const noexcept { return lo_; }
    std::size_t hi() const noexcept { return hi_; }
    std::size_t size() const noexcept { return hi_ - lo_ + 1; }

    auto block() const {
        return parent_->values().middleRows(static_cast<Eigen::Index>(lo_ - 1),
                                            static_cast<Eigen::Index>(size()));
    }

    TimeSeries to_series() const {
        return TimeSeries(Matrix(block()), parent_->period(), parent_->label());
    }

private:
    const TimeSeries* parent_;
    std::size_t lo_;
    std::size_t hi_;
};

inline SeriesSegment TimeSeries::whole() const { return {*this, 1, size()}; }

inline SeriesSegment TimeSeries::segment(std::size_t lo, std::size_t hi) const {
    return {*this, lo, hi};
}

/// Per-dimension arithmetic mean.
inline Vector sample_mean(const SampleBlock& x) {
    if (x.rows() < 1) {
        throw std::invalid_argument("sample_mean: empty input");
    }
    return x.colwise().sum().transpose() / static_cast<double>(x.rows());
}

inline Vector sample_mean(const TimeSeries& s) { return sample_mean(s.values()); }
inline Vector sample_mean(const SeriesSegment& s) { return sample_mean(s.block()); }

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

// Incremental CSV row parser shared by batch loading and stdin streaming.
// Columns are 1-based. The first non-blank row is treated as a header when any
// selected cell in it is non-numeric.
class CsvRowReader {
public:
    explicit CsvRowReader(std::vector<std::size_t> columns) : columns_(std::move(columns)) {
        if (columns_.empty()) {
            throw std::invalid_argument("csv: empty column selection");
        }
        for (auto c : columns_) {
            if (c < 1) {
                throw std::invalid_argument("csv: column indices are 1-based");
            }
        }
    }

    std::size_t dim() const noexcept { return columns_.size(); }

    /// Parses one text line. Returns false for blank or header lines.
    bool parse(std::string_view line, Vector& out) {
        ++row_;
        if (trim(line).empty()) {
            return false;
        }
        const auto cells = detail::split_commas(line);
        out.resize(static_cast<Eigen::Index>(columns_.size()));
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            const std::size_t col = columns_[j];
            std::optional<double> v;
            if (col <= cells.size()) {
                v = parse_finite(cells[col - 1]);
            }
            if (!v) {
                if (!seen_data_ && !header_checked_) {
                    header_checked_ = true;
                    return false;
                }
                std::ostringstream msg;
                msg << "csv: row " << row_ << ", column " << col << ": ";
                if (col > cells.size()) {
                    msg << "missing value";
                } else {
                    msg << "not a finite number '" << trim(cells[col - 1]) << "'";
                }
                throw ParseError(msg.str(), row_, col);
            }
            out(static_cast<Eigen::Index>(j)) = *v;
        }
        header_checked_ = true;
        seen_data_ = true;
        return true;
    }

private:
    std::vector<std::size_t> columns_;
    std::size_t row_ = 0;
    bool header_checked_ = false;
    bool seen_data_ = false;
};

inline TimeSeries read_csv(std::istream& in, const std::vector<std::size_t>& columns,
                           double period = 1.0, std::string label = {}) {
    CsvRowReader reader(columns);
    std::vector<Vector> rows;
    std::string line;
    Vector row;
    while (std::getline(in, line)) {
        if (reader.parse(line, row)) {
            rows.push_back(row);
        }
    }
    if (rows.empty()) {
        throw Error("csv: no data rows");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return TimeSeries(std::move(m), period, std::move(label));
}

inline TimeSeries load_csv(const std::string& path, const std::vector<std::size_t>& columns,
                           double period = 1.0) {
    std::ifstream in(path);
    if (!in) {
        throw Error("csv: cannot open '" + path + "'");
    }
    return read_csv(in, columns, period, path);
}

/// Writes `t,x1..xd` with shortest round-trip number formatting.
inline void write_csv(std::ostream& out, const TimeSeries& s) {
    out << 't';
    for (std::size_t j = 1; j <= s.dim(); ++j) {
        out << ",x" << j;
    }
    out << '\n';
    const auto& v = s.values();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        out << format_double(static_cast<double>(i) * s.period());
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            out << ',' << format_double(v(i, j));
        }
        out << '\n';
    }
}

inline void save_csv(const std::string& path, const TimeSeries& s) {
    std::ofstream out(path);
    if (!out) {
        throw Error("csv: cannot write '" + path + "'");
    }
    write_csv(out, s);
}

}  // namespace cpd
