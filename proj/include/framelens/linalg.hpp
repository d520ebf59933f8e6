#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "framelens/common.hpp"

namespace framelens {

using Vec = std::vector<double>;

// Dense row-major matrix. Bias vectors are stored as 1 x d so that the
// optimizer and the finite-difference oracle can walk every tensor uniformly.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    std::size_t size() const { return a.size(); }

    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

inline bool all_finite(const Mat& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace framelens
