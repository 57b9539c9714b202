// SPDX-License-Identifier: Apache-2.0
#include "psmlab/potential.hpp"

#include <cmath>

namespace psm {

LennardJonesCluster::LennardJonesCluster(int n_particles, double r_m, double tau,
                                         bool include_oscillator)
    : r_m_(r_m), tau_(tau), include_oscillator_(include_oscillator) {
    if (n_particles < 2) throw ConfigError("LJ cluster needs at least 2 particles");
    if (!(r_m > 0.0) || !(tau > 0.0)) throw ConfigError("LJ requires r_m > 0 and tau > 0");
    n_particles_ = n_particles;
    spatial_dim_ = 3;
}

namespace {

double pair_distance(std::span<const double> x, int i, int j) {
    double dx = x[3 * i] - x[3 * j];
    double dy = x[3 * i + 1] - x[3 * j + 1];
    double dz = x[3 * i + 2] - x[3 * j + 2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

[[noreturn]] void throw_singular(int i, int j, double d) {
    throw std::domain_error("coincident particles (" + std::to_string(i) + ", " +
                            std::to_string(j) + "): distance " + std::to_string(d) +
                            " below singularity guard");
}

} // namespace

double LennardJonesCluster::energy(std::span<const double> x) const {
    check_dim(x);
    int n = n_particles_;
    double e = 0.0;
    // Ordered-pair sum with the 1/2 prefactor collapses to one term per
    // unordered pair.
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = pair_distance(x, i, j);
            if (d < kSingularDistance) throw_singular(i, j, d);
            double s6 = std::pow(r_m_ / d, 6);
            e += (s6 * s6 - 2.0 * s6) / tau_;
        }
    }
    if (include_oscillator_) {
        double cx = 0, cy = 0, cz = 0;
        for (int i = 0; i < n; ++i) {
            cx += x[3 * i];
            cy += x[3 * i + 1];
            cz += x[3 * i + 2];
        }
        cx /= n;
        cy /= n;
        cz /= n;
        for (int i = 0; i < n; ++i) {
            double dx = x[3 * i] - cx, dy = x[3 * i + 1] - cy, dz = x[3 * i + 2] - cz;
            e += 0.5 * (dx * dx + dy * dy + dz * dz);
        }
    }
    return e;
}

Vec LennardJonesCluster::force(std::span<const double> x) const {
    check_dim(x);
    int n = n_particles_;
    Vec f(x.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = pair_distance(x, i, j);
            if (d < kSingularDistance) throw_singular(i, j, d);
            double s6 = std::pow(r_m_ / d, 6);
            // dE/dd for the unordered pair term: (12/(tau d)) (s6 - s12).
            double dE_dd = 12.0 * (s6 - s6 * s6) / (tau_ * d);
            for (int k = 0; k < 3; ++k) {
                double unit = (x[3 * i + k] - x[3 * j + k]) / d;
                f[3 * i + k] -= dE_dd * unit;
                f[3 * j + k] += dE_dd * unit;
            }
        }
    }
    if (include_oscillator_) {
        // Mean-coupling terms cancel; contribution to particle i is -(x_i - x_mean).
        double c[3] = {0, 0, 0};
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < 3; ++k) c[k] += x[3 * i + k];
        for (int k = 0; k < 3; ++k) c[k] /= n;
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < 3; ++k) f[3 * i + k] -= x[3 * i + k] - c[k];
    }
    return f;
}

GaussianWell::GaussianWell(int dim, double sigma_tar, Vec mean)
    : dim_(dim), sigma_tar_(sigma_tar), mean_(std::move(mean)) {
    if (dim < 1) throw ConfigError("GaussianWell dimension must be >= 1");
    if (!(sigma_tar > 0.0)) throw ConfigError("GaussianWell sigma_tar must be positive");
    if (mean_.empty()) mean_.assign(static_cast<size_t>(dim), 0.0);
    if (static_cast<int>(mean_.size()) != dim)
        throw ConfigError("GaussianWell mean has wrong dimension");
    n_particles_ = 1;
    spatial_dim_ = dim;
}

double GaussianWell::energy(std::span<const double> x) const {
    check_dim(x);
    double e = 0.0;
    for (int i = 0; i < dim_; ++i) {
        double d = x[i] - mean_[i];
        e += d * d;
    }
    return 0.5 * e / (sigma_tar_ * sigma_tar_);
}

Vec GaussianWell::force(std::span<const double> x) const {
    check_dim(x);
    Vec f(x.size());
    for (int i = 0; i < dim_; ++i) f[i] = -(x[i] - mean_[i]) / (sigma_tar_ * sigma_tar_);
    return f;
}

QuarticToy::QuarticToy(int d, double box_half_width) : d_(d), box_(box_half_width) {
    if (d != 1 && d != 2) throw ConfigError("QuarticToy supports d in {1, 2}");
    if (!(box_half_width > 0.0)) throw ConfigError("QuarticToy box half-width must be positive");
    n_particles_ = 1;
    spatial_dim_ = d;
}

bool QuarticToy::in_domain(std::span<const double> x) const {
    for (int i = 0; i < d_; ++i)
        if (std::abs(x[i]) > box_) return false;
    return true;
}

double QuarticToy::energy(std::span<const double> x) const {
    check_dim(x);
    if (!in_domain(x))
        throw std::domain_error("quartic toy: point outside box [-" +
                                std::to_string(box_) + ", " + std::to_string(box_) + "]");
    double r2 = 0.0;
    for (int i = 0; i < d_; ++i) r2 += x[i] * x[i];
    return kT_ * (5.0 * r2 - r2 * r2);
}

Vec QuarticToy::score(std::span<const double> x) const {
    check_dim(x);
    if (!in_domain(x))
        throw std::domain_error("quartic toy: point outside box [-" +
                                std::to_string(box_) + ", " + std::to_string(box_) + "]");
    double r2 = 0.0;
    for (int i = 0; i < d_; ++i) r2 += x[i] * x[i];
    Vec s(x.size());
    for (int i = 0; i < d_; ++i) s[i] = (4.0 * r2 - 10.0) * x[i];
    return s;
}

Vec QuarticToy::force(std::span<const double> x) const {
    Vec f = score(x);
    for (double& v : f) v *= kT_;
    return f;
}

double check_force_consistency(const PotentialSystem& system,
                               std::span<const double> x, double h) {
    if (!(h > 1e-7 && h < 1e-3))
        throw ConfigError("finite-difference step must lie in (1e-7, 1e-3)");
    Vec f = system.force(x);
    Vec xp(x.begin(), x.end());
    double worst = 0.0;
    for (size_t i = 0; i < xp.size(); ++i) {
        double orig = xp[i];
        xp[i] = orig + h;
        double ep = system.energy(xp);
        xp[i] = orig - h;
        double em = system.energy(xp);
        xp[i] = orig;
        double grad = (ep - em) / (2.0 * h);
        double err = std::abs(f[i] + grad) / (1.0 + std::abs(f[i]));
        if (err > worst) worst = err;
    }
    return worst;
}

} // namespace psm
