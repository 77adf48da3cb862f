#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "charflux/profiles.hpp"
#include "charflux/rng.hpp"

namespace charflux {

/**
 * Closed-form covariance of the limit process of n^{-1/4} Y_n.
 *
 *   general:          sqrt(k2/2pi) { rho (sqrt(s+t) - sqrt|t-s|) + v (sqrt s + sqrt t - sqrt(s+t)) }
 *   equilibrium:      rho sqrt(k2/2pi) (sqrt s + sqrt t - sqrt|t-s|)        (fBm, H = 1/4)
 *   deterministic_ic: rho sqrt(k2/2pi) (sqrt(s+t) - sqrt|t-s|)
 *   brownian:         lambda / sqrt(2pi) (sqrt s + sqrt t - sqrt|t-s|)     (covariance of Y_lambda itself)
 */
class CovKernel {
public:
    enum class Variant { general, equilibrium, deterministic_ic, brownian };

    static CovKernel general(double rho, double v, double kappa2);
    static CovKernel equilibrium(double rho, double kappa2);
    static CovKernel deterministic_ic(double rho, double kappa2);
    static CovKernel brownian(double lambda);

    [[nodiscard]] double operator()(double s, double t) const;
    [[nodiscard]] Variant variant() const noexcept { return variant_; }
    [[nodiscard]] std::string describe() const;

private:
    CovKernel(Variant variant, double rho, double v, double scale);
    Variant variant_;
    double rho_;
    double v_;
    double scale_;  // sqrt(k2 / 2pi) or lambda / sqrt(2pi)
};

double cov(const CovKernel& kernel, double s, double t);

Eigen::MatrixXd gram_matrix(const CovKernel& kernel, std::span<const double> times);
/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& symmetric);
/// min eigenvalue >= -1e-9 * trace.
bool is_psd(const Eigen::MatrixXd& symmetric);

/// E[(Z(t+h) - Z(t))^2].
double increment_variance(const CovKernel& kernel, double t, double h);
/// Smallest C with E[(Z(t) - Z(s))^2] <= C (t - s)^{1/2} over all grid pairs.
double fit_holder_constant(const CovKernel& kernel, std::span<const double> times);

/// The three Brownian integrals used to reduce the fluctuation variance to the kernel.
struct GaussianIntegrals {
    double full = 0.0;   // int_R P(B_s > z) P(B_t <= z) dz
    double half = 0.0;   // int_0^inf P(B_s > z) P(B_t > z) dz
    double cross = 0.0;  // int_R P(B_s > z >= B_t) dz
};

struct QuadratureValue {
    double value = 0.0;
    double error = 0.0;  // achieved error estimate
    bool converged = true;
};

/// Closed forms: sqrt(s+t)/sqrt(2pi), (sqrt s + sqrt t - sqrt(s+t))/(2 sqrt(2pi)), sqrt(t-s)/sqrt(2pi). Requires 0 <= s <= t.
GaussianIntegrals gaussian_integrals(double s, double t);
/// The same three integrals by adaptive Gauss-Kronrod quadrature of the Gaussian-probability integrands.
GaussianIntegrals gaussian_integrals_quadrature(double s, double t);

/// P(B_s > z >= B_t) for 0 <= s <= t, via the bivariate normal CDF (Owen's T), correlation sqrt(s/t).
double prob_cross(double s, double t, double z);
/// Standard bivariate normal CDF P(X <= h, Y <= k) with correlation r in (-1, 1).
double bivariate_normal_cdf(double h, double k, double r);

/// Adaptive G7-K15 integral of f over [a, b], absolute tolerance 1e-10.
QuadratureValue integrate(const std::function<double(double)>& f, double a, double b);

struct SigmaSquares {
    double sigma1_sq = 0.0;  // negative half-line (slow walkers)
    double sigma2_sq = 0.0;  // positive half-line (fast walkers)
    double error = 0.0;      // summed quadrature error estimate
    bool converged = true;
};

/// Half-line variance formulas for sum theta_i Y(t_i); times strictly increasing and positive.
SigmaSquares sigma_squares(std::span<const double> theta, std::span<const double> times, double rho, double v, double kappa2);

/// Solution u(x, t) = u0(x - bt) of the linear transport equation.
double transport_solution(const Profile& profile, double drift, double x, double t);

class FactorizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Exact sampler of the mean-zero Gaussian vector (Z(t_1), ..., Z(t_N)).
 *
 * Uses the symmetric eigendecomposition of the Gram matrix because it is
 * singular at t = 0 and near-singular for close grid points; eigenvalues in
 * [-1e-9 trace, 0) are clamped, anything lower is a FactorizationError.
 */
class LimitProcessSampler {
public:
    LimitProcessSampler(const CovKernel& kernel, std::vector<double> times);
    [[nodiscard]] std::vector<double> draw(RngStream& rng) const;
    [[nodiscard]] const Eigen::MatrixXd& gram() const noexcept { return gram_; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }

private:
    std::vector<double> times_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd factor_;
};

std::vector<double> sample_limit_process(const CovKernel& kernel, const std::vector<double>& times, RngStream& rng);

/// CSV rows (s, t, K) over the grid.
void write_kernel_csv(std::ostream& out, const CovKernel& kernel, std::span<const double> times);

}  // namespace charflux
