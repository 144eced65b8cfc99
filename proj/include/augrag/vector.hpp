#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace augrag {

struct SparseEntry {
    std::uint32_t term_id = 0;
    double weight = 0.0;

    bool operator==(const SparseEntry&) const = default;
};

/// Term-weight vector. Entries are kept sorted by strictly increasing term id.
struct SparseVector {
    std::vector<SparseEntry> entries;

    bool empty() const { return entries.empty(); }
    double norm() const;
    bool operator==(const SparseVector&) const = default;
};

/// Fixed-dimension real vector.
struct DenseVector {
    std::vector<double> values;

    DenseVector() = default;
    explicit DenseVector(std::vector<double> v) : values(std::move(v)) {}
    explicit DenseVector(std::size_t dim) : values(dim, 0.0) {}

    std::size_t dim() const { return values.size(); }
    double norm() const;
    bool operator==(const DenseVector&) const = default;
};

using Vector = std::variant<SparseVector, DenseVector>;

double dot(const SparseVector& a, const SparseVector& b);
double dot(std::span<const double> a, std::span<const double> b);

/// dot(a,b)/(|a||b|), 0 when either norm is zero.
double cosine(const SparseVector& a, const SparseVector& b);
/// Throws DimensionError on mismatched dimensions.
double cosine(const DenseVector& a, const DenseVector& b);
double cosine(std::span<const double> a, std::span<const double> b);

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

} // namespace augrag
