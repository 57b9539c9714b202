// SPDX-License-Identifier: Apache-2.0
#ifndef PSMLAB_POTENTIAL_HPP
#define PSMLAB_POTENTIAL_HPP

#include <memory>
#include <span>
#include <string>

#include "psmlab/common.hpp"

namespace psm {

/// Analytic energy/force system. Boltzmann law: p(x) ~ exp(-energy(x)/kT),
/// force(x) = -grad energy(x).
class PotentialSystem {
public:
    virtual ~PotentialSystem() = default;

    virtual double energy(std::span<const double> x) const = 0;
    virtual Vec force(std::span<const double> x) const = 0;
    virtual int dim() const = 0;
    virtual bool in_domain(std::span<const double> x) const { return true; }
    virtual std::string name() const = 0;

    double kT() const { return kT_; }
    void set_kT(double kT) {
        if (!(kT > 0.0)) throw ConfigError("kT must be positive");
        kT_ = kT;
    }

    int n_particles() const { return n_particles_; }
    int spatial_dim() const { return spatial_dim_; }

protected:
    double kT_ = 1.0;
    int n_particles_ = 1;
    int spatial_dim_ = 1;

    void check_dim(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim())
            throw std::invalid_argument(name() + ": configuration has dimension " +
                                        std::to_string(x.size()) + ", expected " +
                                        std::to_string(dim()));
    }
};

/// Pairwise 12-6 cluster in 3D with an optional harmonic tether of every
/// particle to the instantaneous center of mass.
///   E_LJ = (1/2 tau) * sum_{i != j} ((r_m/d_ij)^12 - 2 (r_m/d_ij)^6)
///   E_osc = (1/2) * sum_i ||x_i - x_mean||^2
class LennardJonesCluster final : public PotentialSystem {
public:
    LennardJonesCluster(int n_particles, double r_m = 1.0, double tau = 1.0,
                        bool include_oscillator = true);

    double energy(std::span<const double> x) const override;
    Vec force(std::span<const double> x) const override;
    int dim() const override { return 3 * n_particles_; }
    std::string name() const override { return "lj" + std::to_string(n_particles_); }

    double r_m() const { return r_m_; }
    double tau() const { return tau_; }
    bool include_oscillator() const { return include_oscillator_; }

    static constexpr double kSingularDistance = 1e-10;

private:
    double r_m_;
    double tau_;
    bool include_oscillator_;
};

/// Isotropic Gaussian well: E = ||x - mu||^2 / (2 sigma_tar^2), so at kT = 1
/// the Boltzmann law is N(mu, sigma_tar^2 I) and force(x) = -(x - mu)/sigma_tar^2.
class GaussianWell final : public PotentialSystem {
public:
    GaussianWell(int dim, double sigma_tar = 1.0, Vec mean = {});

    double energy(std::span<const double> x) const override;
    Vec force(std::span<const double> x) const override;
    int dim() const override { return dim_; }
    std::string name() const override { return "gauss"; }

    double sigma_tar() const { return sigma_tar_; }
    const Vec& mean() const { return mean_; }

private:
    int dim_;
    double sigma_tar_;
    Vec mean_;
};

/// Quartic toy density p(x) ~ exp(-5||x||^2 + ||x||^4), truncated to the box
/// [-box_half_width, box_half_width]^d where it is normalizable.
class QuarticToy final : public PotentialSystem {
public:
    explicit QuarticToy(int d, double box_half_width = 2.0);

    double energy(std::span<const double> x) const override;
    Vec force(std::span<const double> x) const override;
    int dim() const override { return d_; }
    bool in_domain(std::span<const double> x) const override;
    std::string name() const override { return "quartic" + std::to_string(d_) + "d"; }

    /// grad log p(x) = (4||x||^2 - 10) x.
    Vec score(std::span<const double> x) const;

    double box_half_width() const { return box_; }

private:
    int d_;
    double box_;
};

/// Max over coordinates of |analytic force + central-difference gradient of
/// energy| / (1 + |analytic force|).
double check_force_consistency(const PotentialSystem& system,
                               std::span<const double> x, double h);

} // namespace psm

#endif
