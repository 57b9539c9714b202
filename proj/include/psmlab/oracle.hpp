// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_ORACLE_HPP
#define PSMLAB_ORACLE_HPP

#include <functional>

#include "psmlab/potential.hpp"
#include "psmlab/schedule.hpp"

namespace psm {

/// Closed-form ground truth for a 1D Gaussian data law N(mean, std^2).
struct Gaussian1D {
    double mean = 0.0;
    double std = 1.0;

    void validate() const {
        if (!(std > 0.0)) throw ConfigError("Gaussian1D: std must be positive");
    }
};

/// Posterior of x0 given x_t = alpha x0 + sigma_t eps:
///   mean = mean_coeff * x_t + mean_offset, with the stated variance.
struct PosteriorParams {
    double mean_coeff = 0.0;
    double mean_offset = 0.0;
    double variance = 0.0;
};

PosteriorParams gaussian_posterior(const Gaussian1D& g, double alpha, double sigma_t);

struct McCheck {
    double mc_estimate = 0.0;
    double analytic = 0.0;
    double abs_error = 0.0;
};

/// Monte-Carlo check that the posterior expectation of the scaled force equals
/// the marginal score: (1/alpha) E[F(x0)/kT | x_t] vs -(x_t - alpha*mean) /
/// (alpha^2 std^2 + sigma_t^2). Uses kT = 1.
McCheck psm_label_mc_check(const Gaussian1D& g, const NoiseSchedule& schedule,
                           double t, double x_t, long n_draws,
                           std::uint64_t seed = 42);

struct TargetVariance {
    double dsm_var = 0.0;
    double psm_var = 0.0;
};

/// Per-target variance closed forms on the score scale:
///   DSM: d * alpha^2 (std/sigma_t)^2 / (alpha^2 std^2 + sigma_t^2)
///   PSM: (d/alpha^2) (sigma_t/std)^2 / (alpha^2 std^2 + sigma_t^2)
TargetVariance target_variance(const Gaussian1D& g, double alpha, double sigma_t,
                               int dim);

/// Quadrature controls. points_per_axis must be even (composite Simpson uses
/// points_per_axis + 1 nodes); the Richardson check doubles it.
struct QuadratureGrid {
    int points_per_axis = 4096;
    double box_lo = -8.0;
    double box_hi = 8.0;
    double richardson_tol = 1e-5;
};

/// Marginal score of the noised Boltzmann density by direct quadrature of the
/// Gaussian convolution. Supports 1D and 2D systems. Throws NumericError when
/// halving the step changes the answer by more than richardson_tol.
Vec marginal_score_quadrature(const PotentialSystem& system,
                              const NoiseSchedule& schedule, double t,
                              std::span<const double> x_t,
                              const QuadratureGrid& grid);

/// Smooth 1D density given by its unnormalized log density and score.
struct Density1D {
    std::function<double(double)> log_density;
    std::function<double(double)> score;
};

Density1D gaussian_density(double mean, double std);

struct Theorem2Result {
    double I1 = 0.0; // E_{q-post}[s_p] - E_{p-post}[s_p]
    double I2 = 0.0; // E_{q-post}[s_q] - E_{p-post}[s_p]
    double I3 = 0.0; // I2 - I1
    double norm_I1_sq = 0.0;
    double norm_I2_sq = 0.0;
};

/// Posterior-expectation gap quantities for the data-score error bound; the
/// claimed inequality is |I1|^2 <= |I2|^2. Posteriors are formed from each
/// density with the schedule's Gaussian kernel at (x_t, t).
Theorem2Result theorem2_check(const Density1D& p, const Density1D& q,
                              const NoiseSchedule& schedule, double t, double x_t,
                              const QuadratureGrid& grid);

} // namespace psm

#endif
