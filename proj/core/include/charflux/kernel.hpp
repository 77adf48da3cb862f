#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "charflux/rng.hpp"

namespace charflux {

struct KernelStep {
    std::int64_t step = 0;
    double prob = 0.0;
};

struct KernelMoments {
    double drift = 0.0;    // b = sum x p(x)
    double kappa2 = 0.0;   // second (non-central) moment sum x^2 p(x)
};

/**
 * Finitely supported jump kernel of the continuous-time random walk.
 *
 * Construction sorts the support by step, rejects duplicate steps,
 * probabilities outside (0, 1], totals off 1 by more than 1e-12, and kernels
 * whose only step is 0. Finite support makes every exponential moment finite.
 */
class JumpKernel {
public:
    explicit JumpKernel(std::vector<KernelStep> support);

    [[nodiscard]] std::span<const KernelStep> support() const noexcept { return support_; }
    [[nodiscard]] const KernelMoments& moments() const noexcept { return moments_; }
    [[nodiscard]] double drift() const noexcept { return moments_.drift; }
    [[nodiscard]] double kappa2() const noexcept { return moments_.kappa2; }
    [[nodiscard]] std::int64_t min_step() const noexcept { return support_.front().step; }
    [[nodiscard]] std::int64_t max_step() const noexcept { return support_.back().step; }

    /// Kernel of the mirrored walk, p(x) -> p(-x).
    [[nodiscard]] JumpKernel reflected() const;

    /// Two-point nearest-neighbour kernel p(1) = p_right, p(-1) = 1 - p_right.
    static JumpKernel nearest_neighbour(double p_right);

private:
    std::vector<KernelStep> support_;
    KernelMoments moments_;
};

KernelMoments moments(const JumpKernel& kernel);

/**
 * Exact draw of X(duration) - X(0) for the rate-1 walk.
 *
 * Poisson splitting: a Poisson(duration) number of i.i.d. kernel steps has the
 * same law as the independent sum over the support of step * Poisson(duration * p(step)),
 * so the cost is one Poisson draw per support point regardless of duration.
 */
std::int64_t sample_displacement(const JumpKernel& kernel, double duration, RngStream& rng);

/// Log moment generating function of X(1): sum p(x) (e^{theta x} - 1).
double log_mgf(const JumpKernel& kernel, double theta);

/**
 * Cramer rate function I(z) = sup_theta { theta z - log_mgf(theta) } of X(s)/s.
 *
 * The supremum is found by golden-section search on [-50, 50] (the objective
 * is strictly concave). Returns +infinity when z lies outside the cone spanned
 * by the support, e.g. z < 0 for a kernel with only positive steps.
 */
double rate_function(const JumpKernel& kernel, double z);

/**
 * Rate function with the sign-feasibility test hoisted out; carries the kernel
 * by value so callers can hold it independently.
 */
class RateFunction {
public:
    explicit RateFunction(JumpKernel kernel);
    [[nodiscard]] double operator()(double z) const;
    [[nodiscard]] const JumpKernel& kernel() const noexcept { return kernel_; }
    /// Chernoff bound exp(-s I(b - u)) on P{X(s) <= s b - s u}, u >= 0.
    [[nodiscard]] double lower_tail_bound(double s, double u) const;
    /// Chernoff bound exp(-s I(b + u)) on P{X(s) >= s b + s u}, u >= 0.
    [[nodiscard]] double upper_tail_bound(double s, double u) const;

private:
    JumpKernel kernel_;
    bool has_negative_ = false;
    bool has_positive_ = false;
};

/**
 * Upper bound on the expected number of particles starting more than
 * `window` sites from a base point that reach the characteristic by time
 * n * horizon: sum over m > window of the two Chernoff tails at m / (n T).
 * Terms are summed until both fall below 1e-300.
 */
double truncation_bias_bound(const JumpKernel& kernel, std::int64_t n, double horizon, std::int64_t window);

/// Default initial-window radius ceil(6 sqrt(kappa2 n T ln(n T + e))) + ceil(|b|).
std::int64_t recommended_window_radius(const JumpKernel& kernel, std::int64_t n, double horizon);

}  // namespace charflux
