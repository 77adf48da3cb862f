#include "charflux/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace charflux {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double smooth_unit(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * (3.0 - 2.0 * s);
}

double smooth_unit_slope(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return 6.0 * s * (1.0 - s);
}

double floor_checked(double v) {
    if (!std::isfinite(v)) throw std::domain_error("profile: infinite height in deterministic initial condition");
    // Integer part with a relative nudge so exact lattice values such as 10 * 0.3 are not floored down.
    return std::floor(v + 1e-12 * std::max(1.0, std::fabs(v)));
}

}  // namespace

Profile::Profile(ProfileShape shape, std::vector<double> params, double variance_ratio)
    : shape_(shape), params_(std::move(params)), variance_ratio_(variance_ratio) {
    if (!(variance_ratio_ >= 0.0) || !std::isfinite(variance_ratio_)) throw std::invalid_argument("profile: variance ratio must be finite and >= 0");
}

Profile Profile::zero() { return Profile(ProfileShape::zero, {}, 1.0); }

Profile Profile::linear(double slope, double variance_ratio) {
    if (!(slope >= 0.0)) throw std::invalid_argument("profile: linear slope must be >= 0");
    return Profile(ProfileShape::linear, {slope}, variance_ratio);
}

Profile Profile::smoothstep(double base, double height, double left, double right, double variance_ratio) {
    if (!(base >= 0.0 && height >= 0.0)) throw std::invalid_argument("profile: smoothstep base and height must be >= 0");
    if (!(right > left)) throw std::invalid_argument("profile: smoothstep needs right > left");
    return Profile(ProfileShape::smoothstep, {base, height, left, right}, variance_ratio);
}

Profile Profile::gaussian_bump(double base, double amplitude, double center, double width, double variance_ratio) {
    if (!(base >= 0.0 && amplitude >= 0.0)) throw std::invalid_argument("profile: bump base and amplitude must be >= 0");
    if (!(width > 0.0)) throw std::invalid_argument("profile: bump width must be > 0");
    return Profile(ProfileShape::gaussian_bump, {base, amplitude, center, width}, variance_ratio);
}

Profile Profile::wedge() { return Profile(ProfileShape::wedge, {}, 0.0); }

double Profile::u0(double y) const {
    if (mirrored_) {
        Profile plain = *this;
        plain.mirrored_ = false;
        return -plain.u0(-y);
    }
    switch (shape_) {
        case ProfileShape::zero:
            return 0.0;
        case ProfileShape::linear:
            return params_[0] * y;
        case ProfileShape::smoothstep: {
            const double base = params_[0], height = params_[1], a = params_[2], b = params_[3];
            return base * y + height * (smooth_unit((y - a) / (b - a)) - smooth_unit(-a / (b - a)));
        }
        case ProfileShape::gaussian_bump: {
            const double base = params_[0], amp = params_[1], c = params_[2], w = params_[3];
            const double mass = amp * w * std::sqrt(2.0 * std::numbers::pi);
            return base * y + mass * (normal_cdf((y - c) / w) - normal_cdf(-c / w));
        }
        case ProfileShape::wedge:
            return y <= 0.0 ? 0.0 : kInf;
    }
    return 0.0;
}

double Profile::rho0(double y) const {
    if (mirrored_) y = -y;
    switch (shape_) {
        case ProfileShape::zero:
            return 0.0;
        case ProfileShape::linear:
            return params_[0];
        case ProfileShape::smoothstep: {
            const double base = params_[0], height = params_[1], a = params_[2], b = params_[3];
            return base + height * smooth_unit_slope((y - a) / (b - a)) / (b - a);
        }
        case ProfileShape::gaussian_bump: {
            const double base = params_[0], amp = params_[1], c = params_[2], w = params_[3];
            const double d = (y - c) / w;
            return base + amp * std::exp(-0.5 * d * d);
        }
        case ProfileShape::wedge:
            return y < 0.0 ? 0.0 : kInf;
    }
    return 0.0;
}

double Profile::rho_max() const noexcept {
    switch (shape_) {
        case ProfileShape::zero:
            return 0.0;
        case ProfileShape::linear:
            return params_[0];
        case ProfileShape::smoothstep:
            return params_[0] + 1.5 * params_[1] / (params_[3] - params_[2]);
        case ProfileShape::gaussian_bump:
            return params_[0] + params_[1];
        case ProfileShape::wedge:
            return 0.0;  // finite part only
    }
    return 0.0;
}

double Profile::finite_upper_limit() const noexcept {
    return shape_ == ProfileShape::wedge ? 0.0 : kInf;
}

Profile Profile::with_variance_ratio(double ratio) const {
    Profile p = *this;
    if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw std::invalid_argument("profile: variance ratio must be finite and >= 0");
    p.variance_ratio_ = ratio;
    return p;
}

Profile Profile::reflected() const {
    if (shape_ == ProfileShape::wedge) throw std::invalid_argument("profile: wedge cannot be reflected");
    Profile p = *this;
    p.mirrored_ = !mirrored_;
    return p;
}

std::string Profile::describe() const {
    std::ostringstream os;
    switch (shape_) {
        case ProfileShape::zero: os << "zero"; break;
        case ProfileShape::linear: os << "linear(slope=" << params_[0] << ")"; break;
        case ProfileShape::smoothstep:
            os << "smoothstep(base=" << params_[0] << ", height=" << params_[1] << ", left=" << params_[2] << ", right=" << params_[3] << ")";
            break;
        case ProfileShape::gaussian_bump:
            os << "gaussian_bump(base=" << params_[0] << ", amplitude=" << params_[1] << ", center=" << params_[2] << ", width=" << params_[3] << ")";
            break;
        case ProfileShape::wedge: os << "wedge"; break;
    }
    if (mirrored_) os << " mirrored";
    os << ", v0/rho0=" << variance_ratio_;
    return os.str();
}

OccupationLaw parse_occupation_law(std::string_view name) {
    if (name == "poisson") return OccupationLaw::poisson;
    if (name == "poisson_mixture" || name == "mixture") return OccupationLaw::poisson_mixture;
    if (name == "binomial_thinned" || name == "binomial") return OccupationLaw::binomial_thinned;
    if (name == "deterministic") return OccupationLaw::deterministic;
    throw std::invalid_argument("unknown occupation law '" + std::string(name) + "'");
}

std::string_view to_string(OccupationLaw law) {
    switch (law) {
        case OccupationLaw::poisson: return "poisson";
        case OccupationLaw::poisson_mixture: return "poisson_mixture";
        case OccupationLaw::binomial_thinned: return "binomial_thinned";
        case OccupationLaw::deterministic: return "deterministic";
    }
    return "?";
}

OccupationSampler::OccupationSampler(OccupationLaw law, double mean, double variance) : law_(law), mean_(mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean) || !(variance >= 0.0) || !std::isfinite(variance))
        throw std::invalid_argument("occupation: mean and variance must be finite and >= 0");
    if (mean == 0.0) {
        if (variance > 0.0) throw std::invalid_argument("occupation: zero mean requires zero variance");
        return;
    }
    const double tol = 1e-9 * std::max(1.0, mean);
    switch (law) {
        case OccupationLaw::poisson:
            if (std::fabs(variance - mean) > tol) throw std::invalid_argument("occupation: Poisson law needs variance == mean");
            lambda_low_ = lambda_high_ = mean;
            achieved_variance_ = mean;
            break;
        case OccupationLaw::poisson_mixture: {
            if (variance < mean - tol) throw std::invalid_argument("occupation: Poisson mixture needs variance >= mean");
            const double d = std::sqrt(std::max(0.0, variance - mean));
            if (d > mean + tol) throw std::invalid_argument("occupation: Poisson mixture needs variance <= mean + mean^2");
            lambda_low_ = std::max(0.0, mean - d);
            lambda_high_ = mean + d;
            achieved_variance_ = mean + d * d;
            break;
        }
        case OccupationLaw::binomial_thinned: {
            if (variance > mean + tol) throw std::invalid_argument("occupation: binomial law needs variance <= mean");
            // X | N ~ Binomial(N, q), N in {k, k+1} with E N = M and q = mean / M.
            // Variance g(M) = mean (1 - mean/M) + q^2 (M - k)(k + 1 - M); solve g(M) = variance.
            const auto g = [mean](double m) {
                const double k = std::floor(m);
                const double q = mean / m;
                return mean * (1.0 - q) + q * q * (m - k) * (k + 1.0 - m);
            };
            double lo = mean;
            double hi = std::floor(mean) + 1.0;
            const double frac = mean - std::floor(mean);
            if (variance < frac * (1.0 - frac) - tol)
                throw std::invalid_argument("occupation: variance below the integer-valued minimum for this mean");
            bool found = false;
            for (int k = 0; k < 1000000; ++k) {
                if ((g(lo) - variance) * (g(hi) - variance) <= 0.0) {
                    found = true;
                    break;
                }
                lo = hi;
                hi += 1.0;
            }
            if (!found) throw std::invalid_argument("occupation: binomial law cannot reach the requested variance");
            const bool increasing = g(hi) >= g(lo);
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((g(mid) < variance) == increasing) lo = mid; else hi = mid;
            }
            const double m = 0.5 * (lo + hi);
            trials_ = static_cast<std::int64_t>(std::floor(m));
            extra_trial_prob_ = m - std::floor(m);
            success_prob_ = std::min(1.0, mean / m);
            achieved_variance_ = g(m);
            break;
        }
        case OccupationLaw::deterministic:
            if (variance > tol) throw std::invalid_argument("occupation: deterministic law needs zero variance");
            if (std::fabs(mean - std::round(mean)) > tol) throw std::invalid_argument("occupation: deterministic law needs an integer mean");
            trials_ = static_cast<std::int64_t>(std::llround(mean));
            break;
    }
}

std::int64_t OccupationSampler::operator()(RngStream& rng) const {
    if (mean_ == 0.0) return 0;
    switch (law_) {
        case OccupationLaw::poisson:
            return poisson(rng, mean_);
        case OccupationLaw::poisson_mixture:
            return poisson(rng, rng.uniform() < 0.5 ? lambda_low_ : lambda_high_);
        case OccupationLaw::binomial_thinned: {
            const std::int64_t trials = trials_ + (rng.uniform() < extra_trial_prob_ ? 1 : 0);
            return binomial_small(rng, trials, success_prob_);
        }
        case OccupationLaw::deterministic:
            return trials_;
    }
    return 0;
}

InitialCondition::InitialCondition(SiteRange window, std::vector<std::int64_t> counts)
    : window_(window), counts_(std::move(counts)) {
    if (window_.size() != static_cast<std::int64_t>(counts_.size())) throw std::invalid_argument("initial condition: counts do not match window");
    prefix_.assign(counts_.size() + 1, 0);
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i] < 0) throw std::invalid_argument("initial condition: negative count");
        prefix_[i + 1] = prefix_[i] + counts_[i];
    }
}

std::int64_t InitialCondition::count(std::int64_t site) const {
    if (!window_.contains(site)) throw std::out_of_range("initial condition: site outside window");
    return counts_[static_cast<std::size_t>(site - window_.lo)];
}

std::int64_t InitialCondition::sigma0(std::int64_t x) const {
    if (x < window_.lo - 1 || x > window_.hi) throw std::out_of_range("sigma0: site outside window");
    if (window_.lo > 1 || window_.hi < 0) throw std::out_of_range("sigma0: window does not reach the normalisation site 0");
    // prefix index p(x) counts sites lo..x; sigma0(x) = p(x) - p(0).
    const auto index = [this](std::int64_t site) { return static_cast<std::size_t>(site - window_.lo + 1); };
    return prefix_[index(x)] - prefix_[index(0)];
}

std::int64_t InitialCondition::total() const noexcept { return prefix_.back(); }

void InitialCondition::write_csv(std::ostream& out) const {
    out << "site,count\n";
    for (std::int64_t x = window_.lo; x <= window_.hi; ++x) out << x << ',' << counts_[static_cast<std::size_t>(x - window_.lo)] << '\n';
}

RandomIcGenerator::RandomIcGenerator(const Profile& profile, std::int64_t n, SiteRange window, OccupationLaw law) : window_(window) {
    if (n < 1) throw std::invalid_argument("gen_random_ic: n must be >= 1");
    if (profile.shape() == ProfileShape::wedge) throw std::invalid_argument("gen_random_ic: wedge profile has no occupation density");
    samplers_.reserve(static_cast<std::size_t>(window.size()));
    const auto dn = static_cast<double>(n);
    for (std::int64_t x = window.lo; x <= window.hi; ++x) {
        const double y = static_cast<double>(x) / dn;
        const double mean = profile.rho0(y);
        const double variance = profile.v0(y);
        // Neighbouring sites of a flat profile share one solved sampler.
        if (!samplers_.empty() && x > window.lo && profile.rho0(static_cast<double>(x - 1) / dn) == mean &&
            profile.v0(static_cast<double>(x - 1) / dn) == variance) {
            samplers_.push_back(samplers_.back());
        } else {
            samplers_.emplace_back(law, mean, variance);
        }
    }
}

InitialCondition RandomIcGenerator::operator()(const RngStream& rng) const {
    std::vector<std::int64_t> counts(samplers_.size());
    for (std::size_t i = 0; i < samplers_.size(); ++i) {
        RngStream site_rng = rng.child(static_cast<std::uint64_t>(window_.lo + static_cast<std::int64_t>(i)));
        counts[i] = samplers_[i](site_rng);
    }
    return InitialCondition(window_, std::move(counts));
}

InitialCondition gen_random_ic(const Profile& profile, std::int64_t n, SiteRange window, OccupationLaw law, const RngStream& rng) {
    return RandomIcGenerator(profile, n, window, law)(rng);
}

InitialCondition gen_deterministic_ic(const Profile& profile, std::int64_t n, SiteRange window) {
    if (n < 1) throw std::invalid_argument("gen_deterministic_ic: n must be >= 1");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(window.size()));
    const auto dn = static_cast<double>(n);
    for (std::int64_t m = window.lo; m <= window.hi; ++m) {
        const double hi = floor_checked(dn * profile.u0(static_cast<double>(m) / dn));
        const double lo = floor_checked(dn * profile.u0(static_cast<double>(m - 1) / dn));
        const auto eta = static_cast<std::int64_t>(hi - lo);
        if (eta < 0) throw std::invalid_argument("gen_deterministic_ic: u0 is not nondecreasing");
        counts[static_cast<std::size_t>(m - window.lo)] = eta;
    }
    return InitialCondition(window, std::move(counts));
}

}  // namespace charflux
