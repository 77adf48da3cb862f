#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "charflux/profiles.hpp"
#include "charflux/rng.hpp"
#include "charflux/walks.hpp"

namespace charflux {

struct PlanePoint {
    double space = 0.0;
    double time = 0.0;
};

/**
 * Rate-1 Poisson points on the space-time half plane, generated lazily per
 * cell [cx w, (cx+1) w) x [ct h, (ct+1) h). Cell contents depend only on the
 * field stream and the cell coordinates, so any query sees the same points.
 */
class PoissonField {
public:
    explicit PoissonField(RngStream rng, double cell_width = 1.0, double cell_height = 64.0);

    /// Points of one cell.
    [[nodiscard]] std::vector<PlanePoint> cell(std::int64_t cx, std::int64_t ct) const;
    /// Points with space in (space_lo, space_hi] and time in (time_lo, time_hi], unsorted.
    [[nodiscard]] std::vector<PlanePoint> points_in(double space_lo, double space_hi, double time_lo, double time_hi) const;
    /// Points of cell column cx with time in (0, time_hi], sorted by space ascending.
    [[nodiscard]] std::vector<PlanePoint> column(std::int64_t cx, double time_hi) const;

    [[nodiscard]] double cell_width() const noexcept { return cell_width_; }
    [[nodiscard]] double cell_height() const noexcept { return cell_height_; }
    [[nodiscard]] std::int64_t column_of(double space) const;

private:
    RngStream rng_;
    double cell_width_;
    double cell_height_;
};

/// Longest chain strictly increasing in both coordinates (patience sorting, O(N log N)).
std::int64_t lis_count(std::span<const PlanePoint> points);

class FieldExtentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LabelWindowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Incremental Gamma evaluation for one rectangle base.
 *
 * Sweeps points of (base, inf) x (0, t] in space order while maintaining the
 * patience piles; the space coordinate at which the chain length first hits m
 * is base + Gamma(m).
 */
class GammaSweep {
public:
    GammaSweep(const PoissonField& field, double base, double t);

    /// Space coordinate of the point where the chain length reaches m, or +inf if that needs space beyond `space_limit`.
    double attain(std::int64_t m, double space_limit = std::numeric_limits<double>::infinity());
    [[nodiscard]] std::int64_t reached() const noexcept { return static_cast<std::int64_t>(attained_.size()); }
    /// Space coordinate up to which the sweep is complete.
    [[nodiscard]] double frontier() const noexcept { return frontier_; }

private:
    void advance_column();

    const PoissonField* field_;
    double base_;
    double t_;
    std::int64_t next_column_;
    double frontier_;
    std::vector<double> piles_;     // smallest tail time per chain length
    std::vector<double> attained_;  // attained_[m - 1] = space of the point reaching length m
};

/// Minimal h with lis_count((base, base + h] x (0, t]) >= m; FieldExtentError if h would exceed max_height.
double gamma(const PoissonField& field, double base, double t, std::int64_t m, double max_height);

/// Label-indexed locations z(first_label), z(first_label + 1), ...; +inf marks labels excluded from the infimum.
struct HammersleyState {
    std::int64_t first_label = 0;
    std::vector<double> z;
    std::vector<std::int64_t> minimizer;  // minimal label attaining the infimum (evolve output only)

    [[nodiscard]] std::int64_t last_label() const noexcept { return first_label + static_cast<std::int64_t>(z.size()) - 1; }
    [[nodiscard]] double at(std::int64_t label) const;
    /// z(i) - z(i - 1) for labels first_label + 1 ..
    [[nodiscard]] std::vector<double> sticks() const;
};

/**
 * z_t(k) = inf_{i <= k} { z0(i) + Gamma^{i}_t(k - i) } for k in [out_lo, out_hi].
 *
 * Labels i of z0 with z0(i) = z0(i + 1) are dominated and skipped for k > i.
 * Throws LabelWindowError when a minimizer is the lowest label of z0.
 */
HammersleyState evolve(const HammersleyState& z0, const PoissonField& field, double t, std::int64_t out_lo, std::int64_t out_hi);

/// z0(i) = 0 for first_label <= i <= 0 and +inf for 0 < i <= last_label.
HammersleyState wedge_initial_state(std::int64_t first_label, std::int64_t last_label);

struct HopfLaxSolution {
    double x = 0.0;
    double t = 0.0;
    double u = 0.0;
    std::vector<double> minimizers;
    bool shock = false;
    std::size_t evaluations = 0;
};

/// Phi(y) = u0(y) + (x - y)^2 / (4t).
double hopf_lax_phi(const Profile& profile, double x, double t, double y);
/// Interval [y_lo, y_hi] containing every minimizer of Phi over y <= x.
std::pair<double, double> hopf_lax_search_range(const Profile& profile, double x, double t);
/// inf_{y <= x} Phi(y) by a 10^4-step scan and golden-section refinement of each basin.
HopfLaxSolution hopf_lax(const Profile& profile, double x, double t);
/// Rows "x,u,shock,minimizers" with minimizers separated by ';'.
void write_hopf_lax_csv(std::ostream& out, std::span<const HopfLaxSolution> rows);

struct QuadraticGrowth {
    double c1 = 0.0;
    bool ok = false;
};

/// inf over grid y != ybar, |y - ybar| <= delta, y <= upper of (phi(y) - phi(ybar)) / (y - ybar)^2, over all minimizers.
QuadraticGrowth quadratic_growth_constant(const std::function<double(double)>& phi, std::span<const double> minimizers, double delta, double upper,
                                  std::size_t grid_points = 2000);
QuadraticGrowth check_quadratic_growth(const Profile& profile, const HopfLaxSolution& solution, double delta, std::size_t grid_points = 2000);

struct SecondOrderSetup {
    Profile profile = Profile::wedge();
    IcKind ic = IcKind::random;
    OccupationLaw law = OccupationLaw::poisson;
    double x = 1.0;
    double t = 1.0;
    std::int64_t label_margin = 0;  // 0 selects max(16, 4 n^{2/3})
};

struct SecondOrderReplicate {
    double y = 0.0;             // Y_n
    double normalized = 0.0;    // Y_n / (n^{1/3} log n)
    std::int64_t minimizer = 0; // minimal microscopic minimizer
};

/**
 * One replicate of Y_n = {z_{nt}([nx]) - n u(x,t)} - inf_{y in I(x,t)} {z0([ny]) - n u0(y)}.
 * The label window is doubled on LabelWindowError.
 */
SecondOrderReplicate second_order_replicate(const SecondOrderSetup& setup, const HopfLaxSolution& solution, std::int64_t n,
                                            const RngStream& rng);

struct SecondOrderResult {
    std::int64_t n = 0;
    std::vector<double> values;  // Y_n per replicate
    double normalizer = 0.0;     // n^{1/3} log n
    double sd = 0.0;
    double q50 = 0.0;            // quantiles of |Y_n| / normalizer
    double q90 = 0.0;
    double q99 = 0.0;
};

std::vector<SecondOrderResult> second_order_experiment(const SecondOrderSetup& setup, std::span<const std::int64_t> ns, std::size_t replicates,
                                                       const RngStream& rng);

}  // namespace charflux
