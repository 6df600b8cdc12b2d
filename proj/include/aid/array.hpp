#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "aid/errors.hpp"

namespace aid {

using cdouble = std::complex<double>;

/// Dense row-major grid of complex values. The basic spatial object: images,
/// noise fields, k-space planes and coil maps all use it.
class ComplexArray2D {
public:
    ComplexArray2D() = default;

    ComplexArray2D(int rows, int cols)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(check_dims(rows, cols))) {}

    ComplexArray2D(int rows, int cols, std::vector<cdouble> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (static_cast<size_t>(check_dims(rows, cols)) != data_.size())
            throw DimensionError("ComplexArray2D: data length does not match rows*cols");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }

    cdouble& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    const cdouble& operator()(int r, int c) const {
        return data_[static_cast<size_t>(r) * cols_ + c];
    }
    cdouble& operator[](size_t i) { return data_[i]; }
    const cdouble& operator[](size_t i) const { return data_[i]; }

    std::vector<cdouble>& data() { return data_; }
    const std::vector<cdouble>& data() const { return data_; }

    bool same_shape(const ComplexArray2D& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

    bool all_finite() const {
        for (const auto& z : data_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }

private:
    static long long check_dims(int rows, int cols) {
        if (rows <= 0 || cols <= 0)
            throw DimensionError("ComplexArray2D: rows and cols must be positive");
        return static_cast<long long>(rows) * cols;
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<cdouble> data_;
};

inline void require_same_shape(const ComplexArray2D& a, const ComplexArray2D& b,
                               const char* where) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(where) + ": shape mismatch (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

/// Sum of conj(a)*b over all entries.
inline cdouble inner(const ComplexArray2D& a, const ComplexArray2D& b) {
    require_same_shape(a, b, "inner");
    cdouble acc{0.0, 0.0};
    for (size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

inline double norm2(const ComplexArray2D& a) {
    double acc = 0.0;
    for (const auto& z : a.data()) acc += std::norm(z);
    return std::sqrt(acc);
}

inline ComplexArray2D operator+(const ComplexArray2D& a, const ComplexArray2D& b) {
    require_same_shape(a, b, "operator+");
    ComplexArray2D r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

inline ComplexArray2D operator-(const ComplexArray2D& a, const ComplexArray2D& b) {
    require_same_shape(a, b, "operator-");
    ComplexArray2D r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

inline ComplexArray2D operator*(double s, const ComplexArray2D& a) {
    ComplexArray2D r = a;
    for (auto& z : r.data()) z *= s;
    return r;
}

inline ComplexArray2D hadamard(const ComplexArray2D& a, const ComplexArray2D& b) {
    require_same_shape(a, b, "hadamard");
    ComplexArray2D r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] *= b[i];
    return r;
}

inline double max_abs_diff(const ComplexArray2D& a, const ComplexArray2D& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Ordered frames of uniform shape; the unit of autoregressive conditioning.
struct ImageSequence {
    std::vector<ComplexArray2D> frames;

    ImageSequence() = default;
    explicit ImageSequence(std::vector<ComplexArray2D> f) : frames(std::move(f)) {
        validate();
    }

    size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
    const ComplexArray2D& operator[](size_t i) const { return frames[i]; }
    ComplexArray2D& operator[](size_t i) { return frames[i]; }

    void validate() const {
        if (frames.empty()) throw ArgumentError("ImageSequence: at least one frame required");
        for (const auto& f : frames)
            if (!f.same_shape(frames.front()))
                throw DimensionError("ImageSequence: frames must share one shape");
    }
};

}  // namespace aid
