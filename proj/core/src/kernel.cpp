#include "charflux/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace charflux {

namespace {

constexpr double kProbTolerance = 1e-12;
constexpr double kThetaBound = 50.0;
constexpr double kThetaTolerance = 1e-10;
constexpr double kInvGolden = 0.6180339887498949;

template <class F>
double golden_section_max(F&& f, double lo, double hi, double tol) {
    double a = lo;
    double b = hi;
    double c = b - kInvGolden * (b - a);
    double d = a + kInvGolden * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvGolden * (b - a);
            fd = f(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvGolden * (b - a);
            fc = f(c);
        }
    }
    // Endpoints matter when the optimum sits on the search boundary.
    return std::max({fc, fd, f(lo), f(hi), f(0.5 * (a + b))});
}

}  // namespace

JumpKernel::JumpKernel(std::vector<KernelStep> support) : support_(std::move(support)) {
    if (support_.empty()) throw std::invalid_argument("kernel: empty support");
    std::sort(support_.begin(), support_.end(), [](const KernelStep& a, const KernelStep& b) { return a.step < b.step; });
    double total = 0.0;
    bool nonzero = false;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        const auto& s = support_[i];
        if (!(s.prob > 0.0 && s.prob <= 1.0)) throw std::invalid_argument("kernel: probabilities must lie in (0, 1]");
        if (i > 0 && support_[i - 1].step == s.step) throw std::invalid_argument("kernel: duplicate step");
        if (s.step != 0) nonzero = true;
        total += s.prob;
    }
    if (std::fabs(total - 1.0) > kProbTolerance) throw std::invalid_argument("kernel: probabilities must sum to 1");
    if (!nonzero) throw std::invalid_argument("kernel: needs at least one nonzero step");
    moments_ = charflux::moments(*this);
}

JumpKernel JumpKernel::reflected() const {
    std::vector<KernelStep> mirrored;
    mirrored.reserve(support_.size());
    for (const auto& s : support_) mirrored.push_back({-s.step, s.prob});
    return JumpKernel(std::move(mirrored));
}

JumpKernel JumpKernel::nearest_neighbour(double p_right) {
    if (!(p_right >= 0.0 && p_right <= 1.0)) throw std::invalid_argument("kernel: p_right must lie in [0, 1]");
    if (p_right == 1.0) return JumpKernel({{1, 1.0}});
    if (p_right == 0.0) return JumpKernel({{-1, 1.0}});
    return JumpKernel({{-1, 1.0 - p_right}, {1, p_right}});
}

KernelMoments moments(const JumpKernel& kernel) {
    KernelMoments m;
    for (const auto& s : kernel.support()) {
        const auto x = static_cast<double>(s.step);
        m.drift += x * s.prob;
        m.kappa2 += x * x * s.prob;
    }
    return m;
}

std::int64_t sample_displacement(const JumpKernel& kernel, double duration, RngStream& rng) {
    if (!(duration >= 0.0)) throw std::invalid_argument("sample_displacement: duration must be >= 0");
    if (duration == 0.0) return 0;
    std::int64_t displacement = 0;
    for (const auto& s : kernel.support()) {
        if (s.step == 0) continue;
        displacement += s.step * poisson(rng, duration * s.prob);
    }
    return displacement;
}

double log_mgf(const JumpKernel& kernel, double theta) {
    double acc = 0.0;
    for (const auto& s : kernel.support()) acc += s.prob * std::expm1(theta * static_cast<double>(s.step));
    return acc;
}

RateFunction::RateFunction(JumpKernel kernel) : kernel_(std::move(kernel)) {
    has_negative_ = kernel_.min_step() < 0;
    has_positive_ = kernel_.max_step() > 0;
}

double RateFunction::operator()(double z) const {
    if (z < 0.0 && !has_negative_) return std::numeric_limits<double>::infinity();
    if (z > 0.0 && !has_positive_) return std::numeric_limits<double>::infinity();
    const auto objective = [&](double theta) {
        const double v = theta * z - log_mgf(kernel_, theta);
        return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    };
    const double best = golden_section_max(objective, -kThetaBound, kThetaBound, kThetaTolerance);
    return std::max(0.0, best);
}

double RateFunction::lower_tail_bound(double s, double u) const {
    return std::exp(-s * (*this)(kernel_.drift() - u));
}

double RateFunction::upper_tail_bound(double s, double u) const {
    return std::exp(-s * (*this)(kernel_.drift() + u));
}

double rate_function(const JumpKernel& kernel, double z) {
    return RateFunction(kernel)(z);
}

double truncation_bias_bound(const JumpKernel& kernel, std::int64_t n, double horizon, std::int64_t window) {
    if (window < 1) throw std::invalid_argument("truncation_bias_bound: window must be >= 1");
    const double s = static_cast<double>(n) * horizon;
    if (!(s > 0.0)) return 0.0;
    const RateFunction rate(kernel);
    const double b = kernel.drift();
    double total = 0.0;
    for (std::int64_t m = window + 1;; ++m) {
        const double u = static_cast<double>(m) / s;
        const double left = std::exp(-s * rate(b - u));
        const double right = std::exp(-s * rate(b + u));
        total += left + right;
        if (left < 1e-300 && right < 1e-300) break;
    }
    return total;
}

std::int64_t recommended_window_radius(const JumpKernel& kernel, std::int64_t n, double horizon) {
    const double s = static_cast<double>(n) * std::max(horizon, 0.0);
    const double core = 6.0 * std::sqrt(kernel.kappa2() * s * std::log(s + std::numbers::e));
    return static_cast<std::int64_t>(std::ceil(core)) + static_cast<std::int64_t>(std::ceil(std::fabs(kernel.drift())));
}

}  // namespace charflux
