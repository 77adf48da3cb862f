#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "charflux/rng.hpp"

namespace charflux {

enum class ProfileShape {
    zero,           // u0 = 0, empty system
    linear,         // u0(y) = slope * y
    smoothstep,     // u0(y) = base * y + height * S((y - a) / (b - a)), S(s) = 3s^2 - 2s^3
    gaussian_bump,  // rho0(y) = base + amp * exp(-(y - c)^2 / (2 w^2))
    wedge,          // u0 = 0 on y <= 0, +infinity on y > 0 (Hammersley only)
};

/**
 * Macroscopic initial profile (u0, rho0 = u0', v0).
 *
 * Every shape is normalised so that u0(0) = 0. The variance profile is
 * v0 = variance_ratio * rho0, which keeps v0 bounded, nonnegative and as
 * regular as rho0.
 */
class Profile {
public:
    static Profile zero();
    static Profile linear(double slope, double variance_ratio = 1.0);
    static Profile smoothstep(double base, double height, double left, double right, double variance_ratio = 1.0);
    static Profile gaussian_bump(double base, double amplitude, double center, double width, double variance_ratio = 1.0);
    static Profile wedge();

    [[nodiscard]] ProfileShape shape() const noexcept { return shape_; }
    [[nodiscard]] double u0(double y) const;
    [[nodiscard]] double rho0(double y) const;
    [[nodiscard]] double v0(double y) const { return variance_ratio_ * rho0(y); }
    [[nodiscard]] double variance_ratio() const noexcept { return variance_ratio_; }
    /// Supremum of rho0 over R.
    [[nodiscard]] double rho_max() const noexcept;
    /// Largest y at which u0 is finite (+infinity unless wedge).
    [[nodiscard]] double finite_upper_limit() const noexcept;
    [[nodiscard]] Profile with_variance_ratio(double ratio) const;
    /// Profile of the mirrored system y -> -y, with u0 renormalised so u0(0) = 0.
    [[nodiscard]] Profile reflected() const;
    [[nodiscard]] std::string describe() const;

private:
    Profile(ProfileShape shape, std::vector<double> params, double variance_ratio);
    ProfileShape shape_;
    std::vector<double> params_;
    double variance_ratio_ = 1.0;
    bool mirrored_ = false;
};

enum class OccupationLaw {
    poisson,           // requires v = m
    poisson_mixture,   // v > m: Poisson(m - d) or Poisson(m + d) with prob 1/2, d = sqrt(v - m)
    binomial_thinned,  // v < m: Binomial(N, q) with N randomised between two integers
    deterministic,     // v = 0, integer mean
};

OccupationLaw parse_occupation_law(std::string_view name);
std::string_view to_string(OccupationLaw law);

/// Per-site sampler for a fixed (law, mean, variance) target. Construction validates realisability.
class OccupationSampler {
public:
    OccupationSampler(OccupationLaw law, double mean, double variance);
    std::int64_t operator()(RngStream& rng) const;
    [[nodiscard]] double achieved_variance() const noexcept { return achieved_variance_; }

private:
    OccupationLaw law_;
    double mean_;
    double lambda_low_ = 0.0;
    double lambda_high_ = 0.0;
    std::int64_t trials_ = 0;    // binomial: N or N+1
    double extra_trial_prob_ = 0.0;
    double success_prob_ = 0.0;
    double achieved_variance_ = 0.0;
};

struct SiteRange {
    std::int64_t lo = 0;  // inclusive
    std::int64_t hi = 0;  // inclusive
    [[nodiscard]] std::int64_t size() const noexcept { return hi >= lo ? hi - lo + 1 : 0; }
    [[nodiscard]] bool contains(std::int64_t x) const noexcept { return x >= lo && x <= hi; }
};

/**
 * Initial occupation variables on a contiguous site window.
 *
 * sigma0 follows the normalisation sigma0(0) = 0: it is defined for x in
 * [lo - 1, hi] provided the window reaches site 0 (lo <= 1 and hi >= 0).
 */
class InitialCondition {
public:
    InitialCondition(SiteRange window, std::vector<std::int64_t> counts);

    [[nodiscard]] const SiteRange& window() const noexcept { return window_; }
    [[nodiscard]] std::int64_t count(std::int64_t site) const;
    [[nodiscard]] const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
    [[nodiscard]] std::int64_t sigma0(std::int64_t x) const;
    [[nodiscard]] std::int64_t total() const noexcept;
    void write_csv(std::ostream& out) const;

private:
    SiteRange window_;
    std::vector<std::int64_t> counts_;
    std::vector<std::int64_t> prefix_;  // prefix_[i] = sum of counts_[0..i)
};

/**
 * Random initial-condition generator with per-site samplers validated and
 * solved once, so repeated replicates only pay for the draws.
 */
class RandomIcGenerator {
public:
    RandomIcGenerator(const Profile& profile, std::int64_t n, SiteRange window, OccupationLaw law);
    [[nodiscard]] InitialCondition operator()(const RngStream& rng) const;
    [[nodiscard]] const SiteRange& window() const noexcept { return window_; }

private:
    SiteRange window_;
    std::vector<OccupationSampler> samplers_;
};

/// Independent per-site draws with mean rho0(x/n) and variance v0(x/n). Site x uses rng.child(x).
InitialCondition gen_random_ic(const Profile& profile, std::int64_t n, SiteRange window, OccupationLaw law, const RngStream& rng);

/// eta(m) = floor(n u0(m/n)) - floor(n u0((m-1)/n)).
InitialCondition gen_deterministic_ic(const Profile& profile, std::int64_t n, SiteRange window);

}  // namespace charflux
