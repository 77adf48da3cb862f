#include "charflux/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>

namespace charflux {

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
constexpr double kAbsTolerance = 1e-10;
// Phi-bar(8.3) ~ 5e-17: beyond this many standard deviations the integrands vanish.
constexpr double kTailCut = 8.3;

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// P(B_t > z); B_0 = 0.
double upper(double t, double z) {
    if (t == 0.0) return z < 0.0 ? 1.0 : 0.0;
    return 0.5 * std::erfc(z / std::sqrt(2.0 * t));
}

/// P(B_t <= z).
double lower(double t, double z) {
    if (t == 0.0) return z >= 0.0 ? 1.0 : 0.0;
    return 0.5 * std::erfc(-z / std::sqrt(2.0 * t));
}

QuadratureValue integrate_split(const std::function<double(double)>& f, double reach) {
    const QuadratureValue left = integrate(f, -reach, 0.0);
    const QuadratureValue right = integrate(f, 0.0, reach);
    return {left.value + right.value, left.error + right.error, left.converged && right.converged};
}

}  // namespace

CovKernel::CovKernel(Variant variant, double rho, double v, double scale) : variant_(variant), rho_(rho), v_(v), scale_(scale) {}

CovKernel CovKernel::general(double rho, double v, double kappa2) {
    if (!(rho >= 0.0 && v >= 0.0 && kappa2 > 0.0)) throw std::invalid_argument("cov kernel: need rho >= 0, v >= 0, kappa2 > 0");
    return CovKernel(Variant::general, rho, v, std::sqrt(kappa2) * kInvSqrt2Pi);
}

CovKernel CovKernel::equilibrium(double rho, double kappa2) {
    if (!(rho >= 0.0 && kappa2 > 0.0)) throw std::invalid_argument("cov kernel: need rho >= 0, kappa2 > 0");
    return CovKernel(Variant::equilibrium, rho, rho, std::sqrt(kappa2) * kInvSqrt2Pi);
}

CovKernel CovKernel::deterministic_ic(double rho, double kappa2) {
    if (!(rho >= 0.0 && kappa2 > 0.0)) throw std::invalid_argument("cov kernel: need rho >= 0, kappa2 > 0");
    return CovKernel(Variant::deterministic_ic, rho, 0.0, std::sqrt(kappa2) * kInvSqrt2Pi);
}

CovKernel CovKernel::brownian(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("cov kernel: need lambda > 0");
    return CovKernel(Variant::brownian, lambda, lambda, kInvSqrt2Pi);
}

double CovKernel::operator()(double s, double t) const {
    if (!(s >= 0.0 && t >= 0.0)) throw std::invalid_argument("cov kernel: times must be >= 0");
    const double gap = std::sqrt(std::fabs(t - s));
    switch (variant_) {
        case Variant::general:
            return scale_ * (rho_ * (std::sqrt(s + t) - gap) + v_ * (std::sqrt(s) + std::sqrt(t) - std::sqrt(s + t)));
        case Variant::equilibrium:
        case Variant::brownian:
            return scale_ * rho_ * (std::sqrt(s) + std::sqrt(t) - gap);
        case Variant::deterministic_ic:
            return scale_ * rho_ * (std::sqrt(s + t) - gap);
    }
    return 0.0;
}

std::string CovKernel::describe() const {
    std::ostringstream os;
    const double k2 = scale_ * scale_ * 2.0 * std::numbers::pi;
    switch (variant_) {
        case Variant::general: os << "general(rho=" << rho_ << ", v=" << v_ << ", kappa2=" << k2 << ")"; break;
        case Variant::equilibrium: os << "equilibrium(rho=" << rho_ << ", kappa2=" << k2 << ")"; break;
        case Variant::deterministic_ic: os << "deterministic_ic(rho=" << rho_ << ", kappa2=" << k2 << ")"; break;
        case Variant::brownian: os << "brownian(lambda=" << rho_ << ")"; break;
    }
    return os.str();
}

double cov(const CovKernel& kernel, double s, double t) { return kernel(s, t); }

Eigen::MatrixXd gram_matrix(const CovKernel& kernel, std::span<const double> times) {
    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = g(j, i) = kernel(times[static_cast<std::size_t>(i)], times[static_cast<std::size_t>(j)]);
    return g;
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
    if (symmetric.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

bool is_psd(const Eigen::MatrixXd& symmetric) {
    return min_eigenvalue(symmetric) >= -1e-9 * std::max(symmetric.trace(), 0.0);
}

double increment_variance(const CovKernel& kernel, double t, double h) {
    return kernel(t + h, t + h) - 2.0 * kernel(t, t + h) + kernel(t, t);
}

double fit_holder_constant(const CovKernel& kernel, std::span<const double> times) {
    double c = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = i + 1; j < times.size(); ++j) {
            const double s = std::min(times[i], times[j]);
            const double t = std::max(times[i], times[j]);
            if (t == s) continue;
            c = std::max(c, increment_variance(kernel, s, t - s) / std::sqrt(t - s));
        }
    return c;
}

GaussianIntegrals gaussian_integrals(double s, double t) {
    if (!(s >= 0.0 && t >= s)) throw std::invalid_argument("gaussian_integrals: need 0 <= s <= t");
    return {std::sqrt(s + t) * kInvSqrt2Pi, (std::sqrt(s) + std::sqrt(t) - std::sqrt(s + t)) * 0.5 * kInvSqrt2Pi, std::sqrt(t - s) * kInvSqrt2Pi};
}

double bivariate_normal_cdf(double h, double k, double r) {
    if (!(r > -1.0 && r < 1.0)) throw std::invalid_argument("bivariate_normal_cdf: |r| must be < 1");
    if (h == 0.0 && k == 0.0) return 0.25 + std::asin(r) / (2.0 * std::numbers::pi);
    const double root = std::sqrt(1.0 - r * r);
    if (h == 0.0) {
        std::swap(h, k);
    }
    if (k == 0.0) return 0.5 * phi_cdf(h) - boost::math::owens_t(h, -r / root);
    const double ah = (k - r * h) / (h * root);
    const double ak = (h - r * k) / (k * root);
    const double beta = (h * k > 0.0) ? 0.0 : 0.5;
    return 0.5 * (phi_cdf(h) + phi_cdf(k)) - boost::math::owens_t(h, ah) - boost::math::owens_t(k, ak) - beta;
}

double prob_cross(double s, double t, double z) {
    if (!(s >= 0.0 && t >= s)) throw std::invalid_argument("prob_cross: need 0 <= s <= t");
    if (s == t) return 0.0;
    if (s == 0.0) return z < 0.0 ? lower(t, z) : 0.0;
    // P(B_s > z, B_t <= z) = P(B_t <= z) - P(B_s <= z, B_t <= z).
    const double h = z / std::sqrt(s);
    const double k = z / std::sqrt(t);
    const double p = phi_cdf(k) - bivariate_normal_cdf(h, k, std::sqrt(s / t));
    return std::clamp(p, 0.0, 1.0);
}

QuadratureValue integrate(const std::function<double(double)>& f, double a, double b) {
    if (a == b) return {0.0, 0.0, true};
    double error = 0.0;
    double l1 = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, 1e-13, &error, &l1);
    return {value, error, error <= kAbsTolerance};
}

GaussianIntegrals gaussian_integrals_quadrature(double s, double t) {
    if (!(s >= 0.0 && t >= s)) throw std::invalid_argument("gaussian_integrals_quadrature: need 0 <= s <= t");
    if (t == 0.0) return {};
    const double reach = kTailCut * std::sqrt(t);
    GaussianIntegrals out;
    out.full = integrate_split([&](double z) { return upper(s, z) * lower(t, z); }, reach).value;
    out.half = integrate([&](double z) { return upper(s, z) * upper(t, z); }, 0.0, reach).value;
    out.cross = integrate_split([&](double z) { return prob_cross(s, t, z); }, reach).value;
    return out;
}

SigmaSquares sigma_squares(std::span<const double> theta, std::span<const double> times, double rho, double v, double kappa2) {
    if (theta.size() != times.size()) throw std::invalid_argument("sigma_squares: theta and times differ in length");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw std::invalid_argument("sigma_squares: times must be positive");
        if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("sigma_squares: times must be strictly increasing");
    }
    SigmaSquares out;
    if (times.empty()) return out;
    const double reach = kTailCut * std::sqrt(times.back());
    const double root_k2 = std::sqrt(kappa2);
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t j = i; j < times.size(); ++j) {
            const double weight = (i == j ? 1.0 : 2.0) * theta[i] * theta[j] * root_k2;
            if (weight == 0.0) continue;
            const double s = times[i];
            const double t = times[j];
            const auto slow = [&](double z) {
                return rho * (upper(s, z) * lower(t, z) - prob_cross(s, t, z)) + v * lower(s, z) * lower(t, z);
            };
            const auto fast = [&](double z) {
                return rho * (upper(s, z) * lower(t, z) - prob_cross(s, t, z)) + v * upper(s, z) * upper(t, z);
            };
            const QuadratureValue q1 = integrate(slow, -reach, 0.0);
            const QuadratureValue q2 = integrate(fast, 0.0, reach);
            out.sigma1_sq += weight * q1.value;
            out.sigma2_sq += weight * q2.value;
            out.error += std::fabs(weight) * (q1.error + q2.error);
            out.converged = out.converged && q1.converged && q2.converged;
        }
    }
    return out;
}

double transport_solution(const Profile& profile, double drift, double x, double t) {
    return profile.u0(x - drift * t);
}

LimitProcessSampler::LimitProcessSampler(const CovKernel& kernel, std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() > 4096) throw std::invalid_argument("limit sampler: grid larger than 4096 points");
    gram_ = gram_matrix(kernel, times_);
    const auto n = gram_.rows();
    factor_ = Eigen::MatrixXd::Zero(n, n);
    if (n == 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram_);
    if (solver.info() != Eigen::Success) throw FactorizationError("limit sampler: eigendecomposition failed");
    const double floor = -1e-9 * std::max(gram_.trace(), 0.0);
    Eigen::VectorXd roots(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ev = solver.eigenvalues()(i);
        if (ev < floor) throw FactorizationError("limit sampler: Gram matrix has a negative eigenvalue beyond the clamp budget");
        roots(i) = std::sqrt(std::max(ev, 0.0));
    }
    factor_ = solver.eigenvectors() * roots.asDiagonal();
}

std::vector<double> LimitProcessSampler::draw(RngStream& rng) const {
    const auto n = factor_.rows();
    Eigen::VectorXd xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi(i) = standard_normal(rng);
    const Eigen::VectorXd z = factor_ * xi;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        // K(0, .) = 0 makes Z(0) = 0 exactly; round-off from the factor must not leak in.
        out[static_cast<std::size_t>(i)] = gram_(i, i) == 0.0 ? 0.0 : z(i);
    }
    return out;
}

std::vector<double> sample_limit_process(const CovKernel& kernel, const std::vector<double>& times, RngStream& rng) {
    return LimitProcessSampler(kernel, times).draw(rng);
}

void write_kernel_csv(std::ostream& out, const CovKernel& kernel, std::span<const double> times) {
    out << "s,t,K\n";
    for (double s : times)
        for (double t : times) out << s << ',' << t << ',' << kernel(s, t) << '\n';
}

}  // namespace charflux
