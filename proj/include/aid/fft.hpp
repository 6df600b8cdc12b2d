#pragma once

#include <cmath>
#include <vector>

#include "aid/array.hpp"

namespace aid {

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place radix-2 Cooley-Tukey on a stride-1 span. sign = -1 forward,
/// +1 inverse. Applies 1/sqrt(n) so both directions are unitary.
inline void fft1d(cdouble* x, int n, int sign) {
    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * M_PI / len;
        cdouble wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            cdouble w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                cdouble u = x[i + k];
                cdouble v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i) x[i] *= scale;
}

inline ComplexArray2D fft2_impl(const ComplexArray2D& x, int sign) {
    if (!is_pow2(x.rows()) || !is_pow2(x.cols()))
        throw DimensionError("fft2: dimensions must be powers of two, got " +
                             std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    ComplexArray2D out = x;
    for (int r = 0; r < out.rows(); ++r) fft1d(&out.data()[static_cast<size_t>(r) * out.cols()], out.cols(), sign);
    std::vector<cdouble> col(static_cast<size_t>(out.rows()));
    for (int c = 0; c < out.cols(); ++c) {
        for (int r = 0; r < out.rows(); ++r) col[static_cast<size_t>(r)] = out(r, c);
        fft1d(col.data(), out.rows(), sign);
        for (int r = 0; r < out.rows(); ++r) out(r, c) = col[static_cast<size_t>(r)];
    }
    return out;
}

}  // namespace detail

/// Unitary 2-D DFT, frequency origin at index (0,0). ||fft2(x)|| = ||x||.
inline ComplexArray2D fft2(const ComplexArray2D& x) { return detail::fft2_impl(x, -1); }

/// Unitary inverse 2-D DFT; exact adjoint and inverse of fft2.
inline ComplexArray2D ifft2(const ComplexArray2D& k) { return detail::fft2_impl(k, +1); }

/// Circular shift moving the (0,0) frequency bin to the array center.
/// Display helper only; masks and operators index the unshifted layout.
inline ComplexArray2D fftshift(const ComplexArray2D& x) {
    ComplexArray2D out(x.rows(), x.cols());
    int hr = x.rows() / 2, hc = x.cols() / 2;
    for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c)
            out((r + hr) % x.rows(), (c + hc) % x.cols()) = x(r, c);
    return out;
}

inline ComplexArray2D ifftshift(const ComplexArray2D& x) {
    ComplexArray2D out(x.rows(), x.cols());
    int hr = (x.rows() + 1) / 2, hc = (x.cols() + 1) / 2;
    for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c)
            out((r + hr) % x.rows(), (c + hc) % x.cols()) = x(r, c);
    return out;
}

}  // namespace aid
