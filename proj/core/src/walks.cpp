#include "charflux/walks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace charflux {

namespace {

constexpr std::uint64_t kIcStream = 1;
constexpr std::uint64_t kWalkStream = 2;
constexpr double kTimeMatchTolerance = 1e-12;
constexpr double kBiasAnnotationThreshold = 1e-6;

void validate_times(const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("time grid must not be empty");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0) || !std::isfinite(times[i])) throw std::invalid_argument("time grid entries must be finite and >= 0");
        if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
    }
}

}  // namespace

std::int64_t lattice_floor(double v) {
    if (!std::isfinite(v)) throw std::domain_error("lattice_floor: non-finite value");
    return static_cast<std::int64_t>(std::floor(v + 1e-9 * std::max(1.0, std::fabs(v))));
}

WalkSimulator::WalkSimulator(SimConfig config) : config_(std::move(config)) {
    if (config_.n < 1) throw std::invalid_argument("n must be >= 1");
    validate_times(config_.times);
    if (config_.base_points.empty()) throw std::invalid_argument("at least one base point is required");
    if (config_.profile.shape() == ProfileShape::wedge) throw std::invalid_argument("wedge profile is only meaningful for Hammersley's process");

    const double horizon = config_.times.back();
    recommended_radius_ = recommended_window_radius(config_.kernel, config_.n, horizon);
    if (config_.window_radius) {
        if (*config_.window_radius < 1) throw std::invalid_argument("window radius must be >= 1");
        radius_ = *config_.window_radius;
    } else {
        radius_ = recommended_radius_;
    }
    truncation_bias_ = truncation_bias_bound(config_.kernel, config_.n, horizon, radius_);

    const auto dn = static_cast<double>(config_.n);
    const std::int64_t shift = lattice_floor(dn * config_.kernel.drift() * horizon);
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    const auto cover = [&](std::int64_t a, std::int64_t b) {
        lo = std::min({lo, a - radius_, b - radius_});
        hi = std::max({hi, a + radius_, b + radius_});
    };
    for (double y : config_.base_points) {
        const std::int64_t c = lattice_floor(dn * y);
        cover(c, c + shift);
    }
    for (double x : config_.height_points) {
        const std::int64_t level = lattice_floor(dn * x);
        cover(level, level - shift);
    }
    window_ = {lo, hi};

    if (config_.ic == IcKind::random) {
        random_ic_.emplace(config_.profile, config_.n, window_, config_.law);
    } else {
        staircase_ic_.emplace(gen_deterministic_ic(config_.profile, config_.n, window_));
    }
}

std::optional<std::string> WalkSimulator::annotation() const {
    if (truncation_bias_ < kBiasAnnotationThreshold) return std::nullopt;
    std::ostringstream os;
    os << "window radius " << radius_ << " leaves truncation bias bound " << truncation_bias_ << " (recommended radius "
       << recommended_radius_ << ")";
    return os.str();
}

ReplicateState WalkSimulator::simulate_state(const RngStream& replicate_rng) const {
    ReplicateState state{random_ic_ ? (*random_ic_)(replicate_rng.child(kIcStream)) : *staircase_ic_, {}, {}};
    const auto& times = config_.times;
    const auto total = static_cast<std::size_t>(state.ic.total());
    state.start.reserve(total);
    state.positions.assign(times.size(), {});
    for (auto& p : state.positions) p.reserve(total);

    const RngStream walk_rng = replicate_rng.child(kWalkStream);
    const auto dn = static_cast<double>(config_.n);
    for (std::int64_t site = window_.lo; site <= window_.hi; ++site) {
        const std::int64_t count = state.ic.count(site);
        if (count == 0) continue;
        const RngStream site_rng = walk_rng.child(static_cast<std::uint64_t>(site));
        for (std::int64_t slot = 0; slot < count; ++slot) {
            RngStream rng = site_rng.child(static_cast<std::uint64_t>(slot));
            std::int64_t pos = site;
            double previous = 0.0;
            state.start.push_back(site);
            for (std::size_t i = 0; i < times.size(); ++i) {
                pos += sample_displacement(config_.kernel, dn * (times[i] - previous), rng);
                previous = times[i];
                state.positions[i].push_back(pos);
            }
        }
    }
    return state;
}

std::int64_t WalkSimulator::current_count(const std::vector<std::int64_t>& start, const std::vector<std::int64_t>& end, std::int64_t c,
                                          std::int64_t level) const {
    std::int64_t right_to_left = 0;
    std::int64_t left_to_right = 0;
    for (std::size_t i = 0; i < start.size(); ++i) {
        if (start[i] >= c + 1 && end[i] <= level) ++right_to_left;
        if (start[i] <= c && end[i] > level) ++left_to_right;
    }
    return right_to_left - left_to_right;
}

std::int64_t WalkSimulator::current_from_particles(const ReplicateState& state, std::size_t base, std::size_t time) const {
    const auto dn = static_cast<double>(config_.n);
    const std::int64_t c = lattice_floor(dn * config_.base_points.at(base));
    const std::int64_t level = c + lattice_floor(dn * config_.kernel.drift() * config_.times.at(time));
    return current_count(state.start, state.positions[time], c, level);
}

std::int64_t WalkSimulator::current_from_heights(const ReplicateState& state, std::size_t base, std::size_t time) const {
    const auto dn = static_cast<double>(config_.n);
    const double t = config_.times.at(time);
    const std::int64_t c = lattice_floor(dn * config_.base_points.at(base));
    const std::int64_t level = c + lattice_floor(dn * config_.kernel.drift() * t);
    return height_at_site(state, level, t) - state.ic.sigma0(c);
}

const std::vector<std::int64_t>& WalkSimulator::positions_at(const ReplicateState& state, double t) const {
    const auto& times = config_.times;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::fabs(times[i] - t) <= kTimeMatchTolerance) return state.positions[i];
    if (std::fabs(t) <= kTimeMatchTolerance) return state.start;
    throw std::invalid_argument("time is not on the simulated grid");
}

std::int64_t WalkSimulator::height_at_site(const ReplicateState& state, std::int64_t site, double t) const {
    const auto& end = positions_at(state, t);
    std::int64_t crossings = 0;
    for (std::size_t i = 0; i < state.start.size(); ++i) {
        if (state.start[i] <= site && site < end[i]) ++crossings;
        if (end[i] <= site && site < state.start[i]) --crossings;
    }
    return state.ic.sigma0(site) - crossings;
}

std::int64_t WalkSimulator::height_at(const ReplicateState& state, double x, double t) const {
    const auto dn = static_cast<double>(config_.n);
    const std::int64_t level = lattice_floor(dn * x);
    const std::int64_t origin = level - lattice_floor(dn * config_.kernel.drift() * t);
    const std::int64_t need_lo = std::min(level, origin) - radius_;
    const std::int64_t need_hi = std::max(level, origin) + radius_;
    if (need_lo < window_.lo || need_hi > window_.hi) throw std::out_of_range("height_at: point too close to the window edge");
    return height_at_site(state, level, t);
}

CurrentPath WalkSimulator::current_path(const ReplicateState& state) const {
    CurrentPath path;
    path.base_points = config_.base_points;
    path.times = config_.times;
    path.height_points = config_.height_points;
    const auto dn = static_cast<double>(config_.n);
    for (std::size_t a = 0; a < config_.base_points.size(); ++a) {
        std::vector<std::int64_t> row(config_.times.size());
        for (std::size_t i = 0; i < config_.times.size(); ++i) row[i] = current_from_particles(state, a, i);
        path.current.push_back(std::move(row));
        path.sigma0_base.push_back(state.ic.sigma0(lattice_floor(dn * config_.base_points[a])));
    }
    for (double x : config_.height_points) {
        std::vector<std::int64_t> h(config_.times.size());
        std::vector<std::int64_t> origin(config_.times.size());
        for (std::size_t i = 0; i < config_.times.size(); ++i) {
            const double t = config_.times[i];
            h[i] = height_at(state, x, t);
            origin[i] = state.ic.sigma0(lattice_floor(dn * (x - config_.kernel.drift() * t)));
        }
        path.heights.push_back(std::move(h));
        path.heights_origin.push_back(std::move(origin));
    }
    return path;
}

CurrentPath WalkSimulator::simulate_replicate(const RngStream& replicate_rng) const {
    return current_path(simulate_state(replicate_rng));
}

CurrentPath simulate_replicate(const SimConfig& config, const RngStream& replicate_rng) {
    return WalkSimulator(config).simulate_replicate(replicate_rng);
}

std::map<std::int64_t, std::int64_t> occupation_field(const WalkSimulator& sim, const ReplicateState& state, double t) {
    std::map<std::int64_t, std::int64_t> field;
    if (std::fabs(t) <= kTimeMatchTolerance) {
        for (std::int64_t site = state.ic.window().lo; site <= state.ic.window().hi; ++site)
            if (const auto c = state.ic.count(site); c > 0) field[site] = c;
        return field;
    }
    const auto& times = sim.config().times;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (std::fabs(times[i] - t) > kTimeMatchTolerance) continue;
        for (std::int64_t x : state.positions[i]) ++field[x];
        return field;
    }
    throw std::invalid_argument("occupation_field: time is not on the simulated grid");
}

double brownian_min_halfwidth(const std::vector<double>& times) {
    validate_times(times);
    return 8.0 * std::sqrt(times.back());
}

CurrentPath simulate_brownian_current(double lambda, double y, const std::vector<double>& times, double window_halfwidth, const RngStream& rng) {
    if (!(lambda > 0.0)) throw std::invalid_argument("brownian current: lambda must be > 0");
    if (!(window_halfwidth >= brownian_min_halfwidth(times))) throw std::invalid_argument("brownian current: window half-width below 8 sqrt(max t)");
    RngStream count_rng = rng.child(0);
    const std::int64_t particles = poisson(count_rng, lambda * 2.0 * window_halfwidth);

    CurrentPath path;
    path.base_points = {y};
    path.times = times;
    std::vector<std::int64_t> row(times.size(), 0);
    for (std::int64_t i = 0; i < particles; ++i) {
        RngStream prng = rng.child(static_cast<std::uint64_t>(i) + 1);
        const double start = y - window_halfwidth + 2.0 * window_halfwidth * prng.uniform();
        double pos = start;
        double previous = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            pos += std::sqrt(times[k] - previous) * standard_normal(prng);
            previous = times[k];
            if (start <= y && pos > y) ++row[k];
            if (pos <= y && start > y) --row[k];
        }
    }
    path.current.push_back(std::move(row));
    return path;
}

}  // namespace charflux
