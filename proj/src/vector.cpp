#include "augrag/vector.hpp"

#include "augrag/error.hpp"

#include <cmath>
#include <string>

namespace augrag {

double SparseVector::norm() const {
    double s = 0.0;
    for (const auto& e : entries) {
        s += e.weight * e.weight;
    }
    return std::sqrt(s);
}

double DenseVector::norm() const {
    return std::sqrt(dot(values, values));
}

double dot(const SparseVector& a, const SparseVector& b) {
    double s = 0.0;
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    while (ia != a.entries.end() && ib != b.entries.end()) {
        if (ia->term_id < ib->term_id) {
            ++ia;
        } else if (ib->term_id < ia->term_id) {
            ++ib;
        } else {
            s += ia->weight * ib->weight;
            ++ia;
            ++ib;
        }
    }
    return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double cosine(const SparseVector& a, const SparseVector& b) {
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot(a, b) / (na * nb);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("dense dimension mismatch: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double na = std::sqrt(dot(a, a));
    double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot(a, b) / (na * nb);
}

double cosine(const DenseVector& a, const DenseVector& b) {
    return cosine(std::span<const double>(a.values), std::span<const double>(b.values));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace augrag
