#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "aid/array.hpp"
#include "aid/fft.hpp"
#include "aid/rng.hpp"

namespace aid {

enum class MaskKind {
    RandomAcs,
    RandomNoAcs,
    EquispacedAcs,
    EquispacedNoAcs,
    OddLines,
    Full,
};

inline const char* to_string(MaskKind k) {
    switch (k) {
        case MaskKind::RandomAcs: return "random-acs";
        case MaskKind::RandomNoAcs: return "random-noacs";
        case MaskKind::EquispacedAcs: return "equispaced-acs";
        case MaskKind::EquispacedNoAcs: return "equispaced-noacs";
        case MaskKind::OddLines: return "odd-lines";
        case MaskKind::Full: return "full";
    }
    return "?";
}

inline MaskKind mask_kind_from_string(const std::string& s) {
    if (s == "random-acs") return MaskKind::RandomAcs;
    if (s == "random-noacs") return MaskKind::RandomNoAcs;
    if (s == "equispaced-acs") return MaskKind::EquispacedAcs;
    if (s == "equispaced-noacs") return MaskKind::EquispacedNoAcs;
    if (s == "odd-lines") return MaskKind::OddLines;
    if (s == "full") return MaskKind::Full;
    throw ArgumentError("unknown mask kind: " + s);
}

/// Cartesian line mask: whole k-space rows are kept or dropped.
class SamplingMask {
public:
    SamplingMask(int rows, int cols, MaskKind kind, std::vector<std::uint8_t> row_kept)
        : rows_(rows), cols_(cols), kind_(kind), row_kept_(std::move(row_kept)) {
        if (rows <= 0 || cols <= 0) throw DimensionError("SamplingMask: dims must be positive");
        if (row_kept_.size() != static_cast<size_t>(rows))
            throw DimensionError("SamplingMask: row flags must match row count");
        for (auto v : row_kept_)
            if (v > 1) throw ArgumentError("SamplingMask: entries must be 0 or 1");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    MaskKind kind() const { return kind_; }
    bool kept(int r, int /*c*/) const { return row_kept_[static_cast<size_t>(r)] != 0; }
    bool kept_row(int r) const { return row_kept_[static_cast<size_t>(r)] != 0; }
    const std::vector<std::uint8_t>& row_flags() const { return row_kept_; }

    int kept_rows() const {
        return static_cast<int>(std::accumulate(row_kept_.begin(), row_kept_.end(), 0));
    }

    /// Entries of the full rows x cols {0,1} matrix, row-major.
    std::vector<std::uint8_t> to_matrix() const {
        std::vector<std::uint8_t> m(static_cast<size_t>(rows_) * cols_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c)
                m[static_cast<size_t>(r) * cols_ + c] = row_kept_[static_cast<size_t>(r)];
        return m;
    }

    ComplexArray2D apply(const ComplexArray2D& k) const {
        if (k.rows() != rows_ || k.cols() != cols_)
            throw DimensionError("SamplingMask::apply: shape mismatch");
        ComplexArray2D out = k;
        for (int r = 0; r < rows_; ++r)
            if (!kept_row(r))
                for (int c = 0; c < cols_; ++c) out(r, c) = cdouble{0.0, 0.0};
        return out;
    }

private:
    int rows_, cols_;
    MaskKind kind_;
    std::vector<std::uint8_t> row_kept_;
};

namespace detail {

inline void acs_band(int n, int acs_width, int& lo, int& hi) {
    lo = (n - acs_width) / 2;
    hi = lo + acs_width;  // [lo, hi)
}

}  // namespace detail

/// Build a line mask of the requested kind. Random kinds draw exactly
/// lround(n/R) non-ACS lines without replacement, so the achieved
/// acceleration is deterministic; the non-ACS kept fraction must land in
/// [0.8/R, 1.25/R] or the (n, R) pair is rejected.
inline SamplingMask make_mask(MaskKind kind, int n, double factor_r, int acs_width,
                              RngStream rng) {
    if (n <= 0) throw DimensionError("make_mask: n must be positive");
    if (factor_r < 1.0) throw ArgumentError("make_mask: undersampling factor must be >= 1");
    if (factor_r > n) throw ArgumentError("make_mask: factor exceeds line count");
    bool wants_acs = kind == MaskKind::RandomAcs || kind == MaskKind::EquispacedAcs;
    if (wants_acs && (acs_width <= 0 || acs_width >= n))
        throw ArgumentError("make_mask: acs_width must be in (0, n)");

    std::vector<std::uint8_t> keep(static_cast<size_t>(n), 0);
    int acs_lo = 0, acs_hi = 0;
    if (wants_acs) {
        detail::acs_band(n, acs_width, acs_lo, acs_hi);
        for (int r = acs_lo; r < acs_hi; ++r) keep[static_cast<size_t>(r)] = 1;
    }

    auto in_acs = [&](int r) { return wants_acs && r >= acs_lo && r < acs_hi; };
    auto check_band = [&](int non_acs_count) {
        double frac = static_cast<double>(non_acs_count) / n;
        if (frac < 0.8 / factor_r - 1e-12 || frac > 1.25 / factor_r + 1e-12)
            throw ArgumentError("make_mask: achieved non-ACS fraction " + std::to_string(frac) +
                                " outside [0.8/R, 1.25/R] for R=" + std::to_string(factor_r));
    };

    switch (kind) {
        case MaskKind::Full:
            std::fill(keep.begin(), keep.end(), 1);
            break;
        case MaskKind::OddLines:
            for (int r = 0; r < n; r += 2) keep[static_cast<size_t>(r)] = 1;
            break;
        case MaskKind::EquispacedAcs:
        case MaskKind::EquispacedNoAcs: {
            int step = static_cast<int>(std::lround(factor_r));
            if (step < 1) step = 1;
            int count = 0;
            for (int r = 0; r < n; r += step) {
                if (!in_acs(r)) ++count;
                keep[static_cast<size_t>(r)] = 1;
            }
            check_band(count);
            break;
        }
        case MaskKind::RandomAcs:
        case MaskKind::RandomNoAcs: {
            std::vector<int> candidates;
            for (int r = 0; r < n; ++r)
                if (!in_acs(r)) candidates.push_back(r);
            int count = static_cast<int>(std::lround(n / factor_r));
            count = std::min(count, static_cast<int>(candidates.size()));
            check_band(count);
            // partial Fisher-Yates: first `count` entries are the sample
            for (int i = 0; i < count; ++i) {
                auto j = rng.uniform_int(static_cast<std::uint64_t>(i),
                                         candidates.size() - 1);
                std::swap(candidates[static_cast<size_t>(i)], candidates[j]);
                keep[static_cast<size_t>(candidates[static_cast<size_t>(i)])] = 1;
            }
            break;
        }
    }
    return SamplingMask(n, n, kind, std::move(keep));
}

/// Per-receiver complex spatial weights, sum-of-squares normalized.
struct CoilSensitivities {
    std::vector<ComplexArray2D> maps;

    int n_coils() const { return static_cast<int>(maps.size()); }
    int rows() const { return maps.front().rows(); }
    int cols() const { return maps.front().cols(); }

    void validate() const {
        if (maps.empty()) throw ArgumentError("CoilSensitivities: need at least one coil");
        for (const auto& m : maps) require_same_shape(m, maps.front(), "CoilSensitivities");
    }
};

/// Smoothness budget for synthetic maps: max |S(p) - S(q)| over 4-neighbors.
inline double coil_gradient_bound(int n) { return 10.0 / n; }

/// Synthetic coil maps: Gaussian-bump magnitudes centered at distinct border
/// positions with gentle linear phase, then normalized so sum_c |S_c|^2 = 1
/// at every pixel. Stand-in for maps estimated from calibration data.
inline CoilSensitivities synth_coils(int n, int m_c, RngStream rng) {
    if (m_c < 1) throw ArgumentError("synth_coils: coil count must be >= 1");
    if (n <= 0) throw DimensionError("synth_coils: n must be positive");
    CoilSensitivities coils;
    double width = 0.55 * n;
    for (int c = 0; c < m_c; ++c) {
        double jitter = 0.2 * (rng.uniform() - 0.5);
        double theta = 2.0 * M_PI * (c + jitter) / m_c;
        double cr = 0.5 * (n - 1) + 0.5 * n * std::sin(theta);
        double cc = 0.5 * (n - 1) + 0.5 * n * std::cos(theta);
        double pa = (rng.uniform() - 0.5) * 2.0 * M_PI;  // phase slope, row direction
        double pb = (rng.uniform() - 0.5) * 2.0 * M_PI;  // phase slope, col direction
        double p0 = rng.uniform() * 2.0 * M_PI;
        ComplexArray2D map(n, n);
        for (int r = 0; r < n; ++r)
            for (int col = 0; col < n; ++col) {
                double d2 = (r - cr) * (r - cr) + (col - cc) * (col - cc);
                double mag = std::exp(-d2 / (2.0 * width * width));
                double phase = p0 + pa * r / n + pb * col / n;
                map(r, col) = std::polar(mag, phase);
            }
        coils.maps.push_back(std::move(map));
    }
    // pixelwise sum-of-squares normalization
    for (int r = 0; r < n; ++r)
        for (int col = 0; col < n; ++col) {
            double sos = 0.0;
            for (const auto& m : coils.maps) sos += std::norm(m(r, col));
            double s = 1.0 / std::sqrt(sos);
            for (auto& m : coils.maps) m(r, col) *= s;
        }
    return coils;
}

/// The acquisition operator A = P F S with its noise level.
struct ForwardModel {
    SamplingMask mask;
    CoilSensitivities coils;
    double sigma_eta = 1.0;

    ForwardModel(SamplingMask m, CoilSensitivities c, double sigma = 1.0)
        : mask(std::move(m)), coils(std::move(c)), sigma_eta(sigma) {
        coils.validate();
        if (mask.rows() != coils.rows() || mask.cols() != coils.cols())
            throw DimensionError("ForwardModel: mask and coil shapes disagree");
        if (!(sigma_eta > 0.0)) throw ArgumentError("ForwardModel: sigma_eta must be positive");
    }
};

/// Multi-coil k-space samples; zero at every unsampled location.
struct KSpaceFrame {
    std::vector<ComplexArray2D> data;  // one plane per coil
    std::shared_ptr<const ForwardModel> model;

    void validate() const {
        if (!model) throw ArgumentError("KSpaceFrame: missing forward model");
        if (static_cast<int>(data.size()) != model->coils.n_coils())
            throw DimensionError("KSpaceFrame: coil count mismatch");
        for (const auto& plane : data)
            if (plane.rows() != model->mask.rows() || plane.cols() != model->mask.cols())
                throw DimensionError("KSpaceFrame: plane shape mismatch");
    }
};

/// y_c = mask .* fft2(S_c .* x), exact zeros off the mask.
inline KSpaceFrame apply_forward(const std::shared_ptr<const ForwardModel>& model,
                                 const ComplexArray2D& x) {
    if (x.rows() != model->coils.rows() || x.cols() != model->coils.cols())
        throw DimensionError("apply_forward: image shape mismatch");
    KSpaceFrame y;
    y.model = model;
    y.data.reserve(static_cast<size_t>(model->coils.n_coils()));
    for (const auto& s : model->coils.maps)
        y.data.push_back(model->mask.apply(fft2(hadamard(s, x))));
    return y;
}

/// A^H y = sum_c conj(S_c) .* ifft2(mask .* y_c).
inline ComplexArray2D apply_adjoint(const std::shared_ptr<const ForwardModel>& model,
                                    const KSpaceFrame& y) {
    if (static_cast<int>(y.data.size()) != model->coils.n_coils())
        throw DimensionError("apply_adjoint: coil count mismatch");
    ComplexArray2D out(model->coils.rows(), model->coils.cols());
    for (int c = 0; c < model->coils.n_coils(); ++c) {
        if (y.data[static_cast<size_t>(c)].rows() != model->mask.rows() ||
            y.data[static_cast<size_t>(c)].cols() != model->mask.cols())
            throw DimensionError("apply_adjoint: plane shape mismatch");
        ComplexArray2D img = ifft2(model->mask.apply(y.data[static_cast<size_t>(c)]));
        const auto& s = model->coils.maps[static_cast<size_t>(c)];
        for (size_t i = 0; i < out.size(); ++i) out[i] += std::conj(s[i]) * img[i];
    }
    return out;
}

/// Ascent direction of log p(y|x) at x: A^H (y - A x) / sigma_eta^2, with
/// real and imaginary parts read as independent real coordinates.
inline ComplexArray2D likelihood_grad(const std::shared_ptr<const ForwardModel>& model,
                                      const KSpaceFrame& y, const ComplexArray2D& x) {
    if (!(model->sigma_eta > 0.0))
        throw ArgumentError("likelihood_grad: sigma_eta must be positive");
    KSpaceFrame ax = apply_forward(model, x);
    KSpaceFrame resid;
    resid.model = model;
    resid.data.reserve(y.data.size());
    if (y.data.size() != ax.data.size())
        throw DimensionError("likelihood_grad: coil count mismatch");
    for (size_t c = 0; c < y.data.size(); ++c)
        resid.data.push_back(y.data[c] - ax.data[c]);
    ComplexArray2D g = apply_adjoint(model, resid);
    double inv = 1.0 / (model->sigma_eta * model->sigma_eta);
    for (auto& z : g.data()) z *= inv;
    return g;
}

/// Forward projection plus circularly-symmetric noise of total variance
/// sigma_eta^2 per sampled entry (unsampled entries stay exactly zero).
inline KSpaceFrame simulate_kspace(const std::shared_ptr<const ForwardModel>& model,
                                   const ComplexArray2D& x, double noise_sigma,
                                   RngStream rng) {
    if (noise_sigma < 0.0) throw ArgumentError("simulate_kspace: noise must be >= 0");
    KSpaceFrame y = apply_forward(model, x);
    if (noise_sigma > 0.0) {
        double chan = noise_sigma / std::sqrt(2.0);
        for (auto& plane : y.data)
            for (int r = 0; r < plane.rows(); ++r)
                if (model->mask.kept_row(r))
                    for (int c = 0; c < plane.cols(); ++c) plane(r, c) += chan * rng.cnormal();
    }
    return y;
}

}  // namespace aid
