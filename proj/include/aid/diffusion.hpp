#pragma once

#include <cmath>
#include <vector>

#include "aid/array.hpp"
#include "aid/denoiser.hpp"
#include "aid/rng.hpp"
#include "aid/schedule.hpp"

namespace aid {

/// Forward marginal draw: sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, real and
/// imaginary channels independent.
inline ComplexArray2D q_sample(const ComplexArray2D& x0, int t, const ComplexArray2D& eps,
                               const NoiseSchedule& sched) {
    sched.require_step(t);
    require_same_shape(x0, eps, "q_sample");
    double a = std::sqrt(sched.alpha_bar(t));
    double b = std::sqrt(1.0 - sched.alpha_bar(t));
    ComplexArray2D out(x0.rows(), x0.cols());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

struct PosteriorParams {
    ComplexArray2D mu_tilde;
    double beta_tilde;
};

/// Reverse-posterior parameters of q(x^{t-1} | x^t, x^0):
///   mu = sqrt(abar_{t-1}) beta_t / (1 - abar_t) * x0
///      + sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t) * xt
/// with abar_0 = 1. The x0 coefficient uses the cumulative product; that is
/// the form Bayes gives and the one consistent with the eps-parameterized
/// reverse mean below.
inline PosteriorParams q_posterior_params(const ComplexArray2D& x0, const ComplexArray2D& xt,
                                          int t, const NoiseSchedule& sched) {
    sched.require_step(t);
    require_same_shape(x0, xt, "q_posterior_params");
    double ab_t = sched.alpha_bar(t);
    double ab_prev = sched.alpha_bar(t - 1);
    double c0 = std::sqrt(ab_prev) * sched.beta(t) / (1.0 - ab_t);
    double ct = std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab_t);
    PosteriorParams p{ComplexArray2D(x0.rows(), x0.cols()), sched.beta_tilde(t)};
    for (size_t i = 0; i < x0.size(); ++i) p.mu_tilde[i] = c0 * x0[i] + ct * xt[i];
    return p;
}

/// Mean of the eps-parameterized reverse kernel (no noise term).
inline ComplexArray2D ddpm_mean(const ComplexArray2D& xt, const ComplexArray2D& eps_pred,
                                int t, const NoiseSchedule& sched) {
    sched.require_step(t);
    require_same_shape(xt, eps_pred, "ddpm_mean");
    double coef = sched.beta(t) / std::sqrt(1.0 - sched.alpha_bar(t));
    double inv = 1.0 / std::sqrt(sched.alpha(t));
    ComplexArray2D out(xt.rows(), xt.cols());
    for (size_t i = 0; i < out.size(); ++i) out[i] = (xt[i] - coef * eps_pred[i]) * inv;
    return out;
}

/// Ancestral reverse step with fixed variance beta_t; no noise at t = 1.
inline ComplexArray2D ddpm_step(const ComplexArray2D& xt, const ComplexArray2D& eps_pred,
                                int t, const NoiseSchedule& sched, RngStream& rng) {
    ComplexArray2D out = ddpm_mean(xt, eps_pred, t, sched);
    if (t > 1) {
        double s = std::sqrt(sched.beta(t));
        for (auto& z : out.data()) z += s * rng.cnormal();
    }
    return out;
}

/// Deterministic reverse step:
///   x0_hat = (xt - sqrt(1 - abar_t) eps) / sqrt(abar_t)
///   out    = sqrt(abar_{t-1}) x0_hat + sqrt(1 - abar_{t-1}) eps
inline ComplexArray2D ddim_step(const ComplexArray2D& xt, const ComplexArray2D& eps_pred,
                                int t, const NoiseSchedule& sched) {
    sched.require_step(t);
    require_same_shape(xt, eps_pred, "ddim_step");
    double ab_t = sched.alpha_bar(t);
    double ab_prev = sched.alpha_bar(t - 1);
    double inv = 1.0 / std::sqrt(ab_t);
    double som = std::sqrt(1.0 - ab_t);
    double a = std::sqrt(ab_prev);
    double b = std::sqrt(1.0 - ab_prev);
    ComplexArray2D out(xt.rows(), xt.cols());
    for (size_t i = 0; i < out.size(); ++i) {
        cdouble x0_hat = (xt[i] - som * eps_pred[i]) * inv;
        out[i] = a * x0_hat + b * eps_pred[i];
    }
    return out;
}

struct AidLossResult {
    double total = 0.0;
    std::vector<double> terms;  // one per target position, in order
};

/// Stochastic estimate of the sequence training objective: for each target
/// position n = 1..N draw t ~ U{1..T} and eps ~ N(0, I), noise the clean
/// frame, and score || eps_hat - eps ||^2. All positions are predicted in
/// one parallel model call. Position n draws from rng.split(n), so a
/// sequential evaluation with the same splits reproduces the terms exactly.
inline AidLossResult aid_loss(const DenoiserModel& model, const ImageSequence& seq,
                              const NoiseSchedule& sched, const RngStream& rng) {
    if (seq.size() < 2)
        throw ArgumentError("aid_loss: sequence must hold x_0 plus at least one target");
    int n_targets = static_cast<int>(seq.size()) - 1;
    std::vector<ComplexArray2D> noisy;
    std::vector<ComplexArray2D> eps;
    std::vector<int> ts;
    noisy.reserve(static_cast<size_t>(n_targets));
    eps.reserve(static_cast<size_t>(n_targets));
    ts.reserve(static_cast<size_t>(n_targets));
    for (int n = 1; n <= n_targets; ++n) {
        RngStream s = rng.split(static_cast<std::uint64_t>(n));
        int t = static_cast<int>(s.uniform_int(1, static_cast<std::uint64_t>(sched.steps())));
        ComplexArray2D e = s.normal_array(seq[0].rows(), seq[0].cols());
        noisy.push_back(q_sample(seq[static_cast<size_t>(n)], t, e, sched));
        eps.push_back(std::move(e));
        ts.push_back(t);
    }
    std::vector<ComplexArray2D> clean(seq.frames.begin(), seq.frames.end() - 1);
    std::vector<ComplexArray2D> pred = model.predict_eps_parallel(noisy, ts, clean);

    AidLossResult res;
    res.terms.reserve(static_cast<size_t>(n_targets));
    for (int n = 0; n < n_targets; ++n) {
        double term = 0.0;
        const auto& p = pred[static_cast<size_t>(n)];
        const auto& e = eps[static_cast<size_t>(n)];
        for (size_t i = 0; i < p.size(); ++i) term += std::norm(p[i] - e[i]);
        res.terms.push_back(term);
        res.total += term;
    }
    return res;
}

}  // namespace aid
