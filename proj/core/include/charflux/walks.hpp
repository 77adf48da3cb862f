#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "charflux/kernel.hpp"
#include "charflux/profiles.hpp"
#include "charflux/rng.hpp"

namespace charflux {

/// Integer part [v] = max{k : k <= v}, tolerant of round-off just below an integer (relative 1e-9).
std::int64_t lattice_floor(double v);

enum class IcKind {
    random,     // independent occupations drawn from `law`
    staircase,  // deterministic eta(m) = [n u0(m/n)] - [n u0((m-1)/n)]
};

struct SimConfig {
    std::int64_t n = 1;
    std::vector<double> times;        // macroscopic, strictly increasing, >= 0
    std::vector<double> base_points;  // characteristic starting points
    JumpKernel kernel = JumpKernel::nearest_neighbour(0.5);
    Profile profile = Profile::linear(1.0);
    IcKind ic = IcKind::random;
    OccupationLaw law = OccupationLaw::poisson;
    std::optional<std::int64_t> window_radius;  // overrides the recommended radius
    std::vector<double> height_points;          // x values at which sigma_{nt}([nx]) is recorded
};

/**
 * One replicate's output. Currents are Y_n(ybar, t), i.e. the net number of
 * windowed particles that crossed the characteristic from right to left.
 */
struct CurrentPath {
    std::vector<double> base_points;
    std::vector<double> times;
    std::vector<std::vector<std::int64_t>> current;  // [base][time]
    std::vector<std::int64_t> sigma0_base;            // sigma0([n ybar]) per base point
    std::vector<double> height_points;
    std::vector<std::vector<std::int64_t>> heights;         // [x][time]: sigma_{nt}([nx])
    std::vector<std::vector<std::int64_t>> heights_origin;  // [x][time]: sigma0([n(x - bt)])
};

/// Particle positions of one replicate at time 0 and at every grid time.
struct ReplicateState {
    InitialCondition ic;
    std::vector<std::int64_t> start;                   // X_i(0)
    std::vector<std::vector<std::int64_t>> positions;  // [time][particle]: X_i(n t)
};

/**
 * Independent-walk simulator for a fixed configuration.
 *
 * Every particle starting in the window is advanced from grid time to grid
 * time by exact Poissonised displacements. The window is the hull of, per base
 * point, [min(c, c + [nbT]) - w, max(c, c + [nbT]) + w] with c = [n ybar], the
 * same band around every height point, and site 0 (so sigma0 is normalised).
 */
class WalkSimulator {
public:
    explicit WalkSimulator(SimConfig config);

    [[nodiscard]] const SimConfig& config() const noexcept { return config_; }
    [[nodiscard]] const SiteRange& window() const noexcept { return window_; }
    [[nodiscard]] std::int64_t radius() const noexcept { return radius_; }
    [[nodiscard]] std::int64_t recommended_radius() const noexcept { return recommended_radius_; }
    /// truncation_bias_bound at the radius in use; runs with a value above 1e-6 are annotated.
    [[nodiscard]] double truncation_bias() const noexcept { return truncation_bias_; }
    [[nodiscard]] std::optional<std::string> annotation() const;

    [[nodiscard]] ReplicateState simulate_state(const RngStream& replicate_rng) const;
    [[nodiscard]] CurrentPath current_path(const ReplicateState& state) const;
    [[nodiscard]] CurrentPath simulate_replicate(const RngStream& replicate_rng) const;

    /// Y_n via the particle count (signed crossings of the characteristic).
    [[nodiscard]] std::int64_t current_from_particles(const ReplicateState& state, std::size_t base, std::size_t time) const;
    /// Y_n via heights: sigma_{nt}([n ybar] + [nbt]) - sigma0([n ybar]).
    [[nodiscard]] std::int64_t current_from_heights(const ReplicateState& state, std::size_t base, std::size_t time) const;

    /// sigma0([nx]) - J_{nt}([nx]); t must be 0 or a grid time, [nx] must sit inside the window band.
    [[nodiscard]] std::int64_t height_at(const ReplicateState& state, double x, double t) const;
    /// sigma at an arbitrary lattice site, without the interior check.
    [[nodiscard]] std::int64_t height_at_site(const ReplicateState& state, std::int64_t site, double t) const;

private:
    [[nodiscard]] const std::vector<std::int64_t>& positions_at(const ReplicateState& state, double t) const;
    [[nodiscard]] std::int64_t current_count(const std::vector<std::int64_t>& start, const std::vector<std::int64_t>& end, std::int64_t c, std::int64_t level) const;

    SimConfig config_;
    SiteRange window_;
    std::int64_t radius_ = 0;
    std::int64_t recommended_radius_ = 0;
    double truncation_bias_ = 0.0;
    std::optional<RandomIcGenerator> random_ic_;
    std::optional<InitialCondition> staircase_ic_;
};

CurrentPath simulate_replicate(const SimConfig& config, const RngStream& replicate_rng);

/// Histogram of positions at macroscopic time t (0 or a grid time).
std::map<std::int64_t, std::int64_t> occupation_field(const WalkSimulator& sim, const ReplicateState& state, double t);

/**
 * Net current of Brownian particles across y: particles start as a rate-lambda
 * Poisson process on [y - w, y + w] and move by independent Gaussian increments.
 * Counts #{B(0) <= y < B(t)} - #{B(t) <= y < B(0)} at each grid time.
 */
CurrentPath simulate_brownian_current(double lambda, double y, const std::vector<double>& times, double window_halfwidth, const RngStream& rng);

/// Smallest half-width accepted by simulate_brownian_current: 8 sqrt(max t).
double brownian_min_halfwidth(const std::vector<double>& times);

}  // namespace charflux
