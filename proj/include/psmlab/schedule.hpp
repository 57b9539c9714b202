// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_SCHEDULE_HPP
#define PSMLAB_SCHEDULE_HPP

#include <span>

#include "psmlab/common.hpp"

namespace psm {

enum class ScheduleKind { VE, VP };

/// Forward diffusion coefficients for the VE and VP SDEs on t in [0, 1].
///
/// VE: alpha(t) = 1, sigma(t) = sigma_min * (sigma_max/sigma_min)^t.
/// VP: alpha(t) = exp(-B(t)/2), sigma(t) = sqrt(1 - exp(-B(t))) with
///     B(t) = beta_min*t + (beta_max - beta_min)*t^2/2, so alpha^2 + sigma^2 = 1.
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::VE;
    double sigma_min = 0.1;
    double sigma_max = 5.0;
    double beta_min = 0.1;
    double beta_max = 20.0;

    static NoiseSchedule ve(double sigma_min, double sigma_max);
    static NoiseSchedule vp(double beta_min = 0.1, double beta_max = 20.0);

    struct Coeffs {
        double alpha;
        double sigma;
    };
    Coeffs coeffs(double t) const;

    struct SdeCoeffs {
        double drift_scale; // f(x,t) = drift_scale * x
        double diffusion;   // g(t)
    };
    SdeCoeffs sde_coeffs(double t) const;

    /// x_t = alpha(t)*x0 + sigma(t)*noise, elementwise.
    Vec perturb(std::span<const double> x0, double t,
                std::span<const double> noise) const;

    /// Std of the t=1 prior used by the reverse-time samplers.
    double prior_std() const;

    void validate() const;
};

} // namespace psm

#endif
