#pragma once

#include <cmath>
#include <vector>

#include "aid/errors.hpp"

namespace aid {

/// Variance schedule: beta_t, alpha_t = 1 - beta_t, abar_t = prod alpha_s,
/// and the reverse-posterior width btilde_t = (1 - abar_{t-1})/(1 - abar_t) * beta_t.
/// Arrays are 1-based via accessors; abar(0) == 1 by convention so t = 1 is
/// well defined everywhere.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> beta) : beta_(std::move(beta)) {
        if (beta_.empty()) throw ArgumentError("NoiseSchedule: need at least one step");
        alpha_.resize(beta_.size());
        abar_.resize(beta_.size());
        btilde_.resize(beta_.size());
        double prod = 1.0;
        double prev_abar = 1.0;
        double prev_beta = 0.0;
        for (size_t i = 0; i < beta_.size(); ++i) {
            double b = beta_[i];
            if (!(b > 0.0 && b < 1.0))
                throw ArgumentError("NoiseSchedule: beta must lie in (0, 1)");
            if (i > 0 && !(b > prev_beta))
                throw ArgumentError("NoiseSchedule: beta must be strictly increasing");
            alpha_[i] = 1.0 - b;
            prod *= alpha_[i];
            abar_[i] = prod;
            btilde_[i] = (1.0 - prev_abar) / (1.0 - prod) * b;
            prev_abar = prod;
            prev_beta = b;
        }
    }

    int steps() const { return static_cast<int>(beta_.size()); }

    double beta(int t) const { return beta_[idx(t)]; }
    double alpha(int t) const { return t == 0 ? 1.0 : alpha_[idx(t)]; }
    double alpha_bar(int t) const { return t == 0 ? 1.0 : abar_[idx(t)]; }
    double beta_tilde(int t) const { return btilde_[idx(t)]; }

    void require_step(int t) const { (void)idx(t); }

private:
    size_t idx(int t) const {
        if (t < 1 || t > steps())
            throw ArgumentError("NoiseSchedule: step " + std::to_string(t) +
                                " outside [1, " + std::to_string(steps()) + "]");
        return static_cast<size_t>(t - 1);
    }

    std::vector<double> beta_, alpha_, abar_, btilde_;
};

/// Linear beta ramp from beta_min to beta_max over T steps.
inline NoiseSchedule make_schedule(int t_count, double beta_min = 1e-4,
                                   double beta_max = 0.02) {
    if (t_count < 1) throw ArgumentError("make_schedule: T must be >= 1");
    if (!(beta_min > 0.0) || !(beta_min < beta_max) || !(beta_max < 1.0))
        throw ArgumentError("make_schedule: need 0 < beta_min < beta_max < 1");
    std::vector<double> beta(static_cast<size_t>(t_count));
    if (t_count == 1) {
        beta[0] = beta_min;
    } else {
        for (int i = 0; i < t_count; ++i)
            beta[static_cast<size_t>(i)] =
                beta_min + (beta_max - beta_min) * i / (t_count - 1);
    }
    return NoiseSchedule(std::move(beta));
}

}  // namespace aid
