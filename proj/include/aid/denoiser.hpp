#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "aid/array.hpp"
#include "aid/schedule.hpp"

namespace aid {

/// Conditioning passed to a noise predictor: the clean frames preceding the
/// one being denoised, oldest first, plus the frame index being generated.
struct DenoiserContext {
    std::vector<ComplexArray2D> cond_frames;
    int position = 0;

    void validate_shapes(const ComplexArray2D& xt) const {
        for (const auto& f : cond_frames)
            require_same_shape(f, xt, "DenoiserContext");
    }
};

/// Abstract eps-predictor: eps_theta(x_t, t, context).
class DenoiserModel {
public:
    virtual ~DenoiserModel() = default;

    virtual ComplexArray2D predict_eps(const ComplexArray2D& xt, int t,
                                       const DenoiserContext& ctx) const = 0;

    /// Predict for every target position of a sequence in one call.
    /// noisy[k] is x_{k+1} at step ts[k]; clean[0..len-1] are the clean
    /// frames, so position n = k+1 may use clean frames with index < n only.
    /// Default: one single-position call per target.
    virtual std::vector<ComplexArray2D> predict_eps_parallel(
        const std::vector<ComplexArray2D>& noisy, const std::vector<int>& ts,
        const std::vector<ComplexArray2D>& clean) const {
        if (noisy.size() != ts.size())
            throw DimensionError("predict_eps_parallel: noisy/ts length mismatch");
        std::vector<ComplexArray2D> out;
        out.reserve(noisy.size());
        for (size_t k = 0; k < noisy.size(); ++k) {
            DenoiserContext ctx;
            ctx.position = static_cast<int>(k) + 1;
            ctx.cond_frames.assign(clean.begin(), clean.begin() + ctx.position);
            out.push_back(predict_eps(noisy[k], ts[k], ctx));
        }
        return out;
    }
};

/// Diagonal Gaussian prior N(mean, diag(var)) used as an analytically exact
/// denoiser for verification.
struct GaussianPriorSpec {
    ComplexArray2D mean;
    std::vector<double> var;  // per pixel, >= 0

    void validate() const {
        if (var.size() != mean.size())
            throw DimensionError("GaussianPriorSpec: var length must match mean");
        for (double v : var)
            if (!(v >= 0.0)) throw ArgumentError("GaussianPriorSpec: var must be >= 0");
    }
};

/// Exact conditional-mean noise prediction for the diagonal Gaussian prior:
///   E[x0|xt] = mu + sqrt(abar_t) v / (abar_t v + 1 - abar_t) * (xt - sqrt(abar_t) mu)
///   eps_hat  = (xt - sqrt(abar_t) E[x0|xt]) / sqrt(1 - abar_t)
/// applied per pixel to real and imaginary channels alike.
inline ComplexArray2D gaussian_eps(const GaussianPriorSpec& prior, const ComplexArray2D& xt,
                                   int t, const NoiseSchedule& sched) {
    require_same_shape(prior.mean, xt, "gaussian_eps");
    prior.validate();
    sched.require_step(t);
    double ab = sched.alpha_bar(t);
    double sab = std::sqrt(ab);
    double som = std::sqrt(1.0 - ab);
    ComplexArray2D eps(xt.rows(), xt.cols());
    for (size_t i = 0; i < xt.size(); ++i) {
        double gain = sab * prior.var[i] / (ab * prior.var[i] + (1.0 - ab));
        cdouble x0_hat = prior.mean[i] + gain * (xt[i] - sab * prior.mean[i]);
        eps[i] = (xt[i] - sab * x0_hat) / som;
    }
    return eps;
}

/// DenoiserModel wrapper around the analytic prior; ignores the context.
class GaussianPriorDenoiser : public DenoiserModel {
public:
    GaussianPriorDenoiser(GaussianPriorSpec prior, NoiseSchedule sched)
        : prior_(std::move(prior)), sched_(std::move(sched)) {
        prior_.validate();
    }

    ComplexArray2D predict_eps(const ComplexArray2D& xt, int t,
                               const DenoiserContext& ctx) const override {
        ctx.validate_shapes(xt);
        return gaussian_eps(prior_, xt, t, sched_);
    }

    const GaussianPriorSpec& prior() const { return prior_; }

private:
    GaussianPriorSpec prior_;
    NoiseSchedule sched_;
};

}  // namespace aid
