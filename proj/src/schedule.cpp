// SPDX-License-Identifier: Apache-2.0
#include "psmlab/schedule.hpp"

#include <cmath>

namespace psm {

namespace {

void check_time(double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::domain_error("diffusion time t=" + std::to_string(t) +
                                " outside [0, 1]");
}

} // namespace

NoiseSchedule NoiseSchedule::ve(double sigma_min, double sigma_max) {
    NoiseSchedule s;
    s.kind = ScheduleKind::VE;
    s.sigma_min = sigma_min;
    s.sigma_max = sigma_max;
    s.validate();
    return s;
}

NoiseSchedule NoiseSchedule::vp(double beta_min, double beta_max) {
    NoiseSchedule s;
    s.kind = ScheduleKind::VP;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.validate();
    return s;
}

void NoiseSchedule::validate() const {
    if (kind == ScheduleKind::VE) {
        if (!(sigma_min > 0.0) || !(sigma_max > sigma_min))
            throw ConfigError("VE schedule requires 0 < sigma_min < sigma_max");
    } else {
        if (!(beta_min > 0.0) || !(beta_max > beta_min))
            throw ConfigError("VP schedule requires 0 < beta_min < beta_max");
    }
}

NoiseSchedule::Coeffs NoiseSchedule::coeffs(double t) const {
    check_time(t);
    if (kind == ScheduleKind::VE) {
        return {1.0, sigma_min * std::pow(sigma_max / sigma_min, t)};
    }
    double B = beta_min * t + 0.5 * (beta_max - beta_min) * t * t;
    return {std::exp(-0.5 * B), std::sqrt(-std::expm1(-B))};
}

NoiseSchedule::SdeCoeffs NoiseSchedule::sde_coeffs(double t) const {
    check_time(t);
    if (kind == ScheduleKind::VE) {
        // d(sigma^2)/dt = g^2 gives g(t) = sigma(t) * sqrt(2 ln(sigma_max/sigma_min)).
        double sigma = sigma_min * std::pow(sigma_max / sigma_min, t);
        return {0.0, sigma * std::sqrt(2.0 * std::log(sigma_max / sigma_min))};
    }
    double beta = beta_min + (beta_max - beta_min) * t;
    return {-0.5 * beta, std::sqrt(beta)};
}

Vec NoiseSchedule::perturb(std::span<const double> x0, double t,
                           std::span<const double> noise) const {
    if (x0.size() != noise.size())
        throw std::invalid_argument("perturb: noise shape " +
                                    std::to_string(noise.size()) +
                                    " does not match data shape " +
                                    std::to_string(x0.size()));
    auto [alpha, sigma] = coeffs(t);
    Vec out(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) out[i] = alpha * x0[i] + sigma * noise[i];
    return out;
}

double NoiseSchedule::prior_std() const {
    return kind == ScheduleKind::VE ? sigma_max : 1.0;
}

} // namespace psm
