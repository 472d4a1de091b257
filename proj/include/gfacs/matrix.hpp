#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

namespace gfacs {

/// Dense square matrix of doubles, row-major.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(int n, double fill = 0.0)
        : n_(n), v_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill) {}

    int dim() const { return n_; }

    double& operator()(int i, int j) { return v_[index(i, j)]; }
    double operator()(int i, int j) const { return v_[index(i, j)]; }

    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

    bool operator==(const Matrix& o) const { return n_ == o.n_ && v_ == o.v_; }

private:
    std::size_t index(int i, int j) const {
        assert(i >= 0 && i < n_ && j >= 0 && j < n_);
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(j);
    }

    int n_ = 0;
    std::vector<double> v_;
};

}  // namespace gfacs
