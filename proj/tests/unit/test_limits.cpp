#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "charflux/limits.hpp"

using namespace charflux;

namespace {

const double kRoot2Pi = std::sqrt(2.0 * std::numbers::pi);

double phi(double x) { return std::exp(-0.5 * x * x) / kRoot2Pi; }
double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Composite Simpson on [a, b] with m (even) panels.
template <class F>
double simpson(F f, double a, double b, int m) {
    const double h = (b - a) / m;
    double s = f(a) + f(b);
    for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double bvn_oracle(double h, double k, double r) {
    const double root = std::sqrt(1.0 - r * r);
    return simpson([&](double x) { return phi(x) * Phi((k - r * x) / root); }, -12.0, h, 20000);
}

double cross_oracle(double s, double t, double z) {
    const double sd = std::sqrt(s);
    const double gap = std::sqrt(t - s);
    return simpson([&](double x) { return phi(x / sd) / sd * Phi((z - x) / gap); }, z, z + 12.0 * sd, 20000);
}

}  // namespace

TEST(Limits, EquilibriumVarianceAtOne) { EXPECT_NEAR(CovKernel::equilibrium(1.0, 1.0)(1.0, 1.0), std::sqrt(2.0 / std::numbers::pi), 1e-15); }

TEST(Limits, GeneralKernelArithmetic) {
    EXPECT_NEAR(CovKernel::general(2.0, 0.0, 1.0)(1.0, 4.0), 2.0 * (std::sqrt(5.0) - std::sqrt(3.0)) / kRoot2Pi, 1e-15);
    EXPECT_NEAR(CovKernel::general(2.0, 0.0, 1.0)(1.0, 4.0), 0.402148, 1e-6);
}

TEST(Limits, KernelsVanishAtZero) {
    for (const auto& k : {CovKernel::general(1.3, 0.4, 2.0), CovKernel::equilibrium(0.7, 1.0), CovKernel::deterministic_ic(2.0, 0.5), CovKernel::brownian(100.0)})
        for (double t : {0.0, 0.3, 2.0}) EXPECT_EQ(k(0.0, t), 0.0) << k.describe();
}

TEST(Limits, KernelValidation) {
    EXPECT_THROW(CovKernel::general(-1.0, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(CovKernel::general(1.0, 0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(CovKernel::brownian(0.0), std::invalid_argument);
    EXPECT_THROW((void)CovKernel::equilibrium(1.0, 1.0)(-1.0, 1.0), std::invalid_argument);
}

TEST(Limits, VariantReductions) {
    RngStream rng(1);
    for (int i = 0; i < 200; ++i) {
        const double s = 5.0 * rng.uniform(), t = 5.0 * rng.uniform(), rho = 3.0 * rng.uniform(), k2 = 0.1 + 2.0 * rng.uniform();
        EXPECT_NEAR(CovKernel::general(rho, rho, k2)(s, t), CovKernel::equilibrium(rho, k2)(s, t), 1e-12);
        EXPECT_NEAR(CovKernel::general(rho, 0.0, k2)(s, t), CovKernel::deterministic_ic(rho, k2)(s, t), 1e-12);
        EXPECT_DOUBLE_EQ(CovKernel::general(rho, 0.5, k2)(s, t), CovKernel::general(rho, 0.5, k2)(t, s));
    }
}

TEST(Limits, SelfSimilarity) {
    RngStream rng(2);
    const auto k = CovKernel::general(1.2, 0.6, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double a = 0.1 + 10.0 * rng.uniform(), s = 3.0 * rng.uniform(), t = 3.0 * rng.uniform();
        EXPECT_NEAR(k(a * s, a * t), std::sqrt(a) * k(s, t), 1e-12);
    }
}

TEST(Limits, BrownianKernelDisplayValue) { EXPECT_NEAR(CovKernel::brownian(100.0)(1.0, 2.0), 100.0 * std::sqrt(2.0) / kRoot2Pi, 1e-12); }

TEST(Limits, GramMatricesArePsd) {
    RngStream rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> times(2 + trial % 60);
        for (auto& t : times) t = 10.0 * rng.uniform();
        const double rho = 2.0 * rng.uniform(), v = 2.0 * rng.uniform();
        EXPECT_TRUE(is_psd(gram_matrix(CovKernel::general(rho, v, 1.0), times)));
        EXPECT_TRUE(is_psd(gram_matrix(CovKernel::deterministic_ic(rho + 0.1, 1.0), times)));
    }
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_FALSE(is_psd(bad));
}

TEST(Limits, IncrementVarianceMonotonicity) {
    const double h = 0.1;
    const auto dec = CovKernel::general(1.0, 2.0, 1.0);
    const auto inc = CovKernel::general(1.0, 0.3, 1.0);
    const auto flat = CovKernel::general(1.0, 1.0, 1.0);
    for (double t = 0.0; t < 5.0; t += 0.25) {
        EXPECT_GT(increment_variance(dec, t, h), increment_variance(dec, t + 0.25, h));
        EXPECT_LT(increment_variance(inc, t, h), increment_variance(inc, t + 0.25, h));
        EXPECT_NEAR(increment_variance(flat, t, h), increment_variance(flat, t + 0.25, h), 1e-12);
    }
}

TEST(Limits, HolderConstantBoundsDenseGrid) {
    const auto k = CovKernel::general(1.0, 2.0, 1.0);
    std::vector<double> coarse;
    for (int i = 0; i <= 40; ++i) coarse.push_back(0.1 * i);
    const double c = fit_holder_constant(k, coarse);
    EXPECT_GT(c, 0.0);
    for (int i = 0; i < 400; ++i)
        for (int j = i + 1; j < 400; j += 7) {
            const double s = 0.01 * i, t = 0.01 * j;
            EXPECT_LE(increment_variance(k, s, t - s), 1.05 * c * std::sqrt(t - s));
        }
}

TEST(Limits, GaussianIntegralsClosedForm) {
    const auto g = gaussian_integrals(1.0, 1.0);
    EXPECT_NEAR(g.full, 0.564190, 1e-6);
    EXPECT_NEAR(g.half, (2.0 - std::sqrt(2.0)) / (2.0 * kRoot2Pi), 1e-15);
    EXPECT_NEAR(g.cross, 0.0, 1e-15);
    EXPECT_NEAR(gaussian_integrals(0.0, 2.5).cross, std::sqrt(2.5) / kRoot2Pi, 1e-15);
    EXPECT_THROW(gaussian_integrals(2.0, 1.0), std::invalid_argument);
}

TEST(Limits, GaussianIntegralsQuadratureAgrees) {
    for (double s : {1e-3, 0.1, 1.0, 30.0})
        for (double t : {s, 2.0 * s, 1.0, 1e3}) {
            if (t < s) continue;
            const auto c = gaussian_integrals(s, t);
            const auto q = gaussian_integrals_quadrature(s, t);
            EXPECT_NEAR(q.full, c.full, 1e-8) << s << " " << t;
            EXPECT_NEAR(q.half, c.half, 1e-8) << s << " " << t;
            EXPECT_NEAR(q.cross, c.cross, 1e-8) << s << " " << t;
        }
}

TEST(Limits, BivariateNormalAgainstNestedIntegral) {
    for (double r : {-0.8, -0.3, 0.0, 0.2, 0.7, 0.99})
        for (double h : {-2.0, -0.5, 0.0, 0.4, 1.7})
            for (double k : {-1.5, 0.0, 0.3, 2.2}) EXPECT_NEAR(bivariate_normal_cdf(h, k, r), bvn_oracle(h, k, r), 1e-10) << h << " " << k << " " << r;
    EXPECT_NEAR(bivariate_normal_cdf(0.0, 0.0, 0.5), 0.25 + std::asin(0.5) / (2.0 * std::numbers::pi), 1e-15);
    EXPECT_THROW(bivariate_normal_cdf(0.0, 0.0, 1.0), std::invalid_argument);
}

TEST(Limits, CrossProbabilityAgainstNestedIntegral) {
    for (double s : {0.2, 1.0})
        for (double t : {1.5, 4.0})
            for (double z : {-2.0, -0.3, 0.0, 0.5, 1.8}) EXPECT_NEAR(prob_cross(s, t, z), cross_oracle(s, t, z), 1e-10) << s << " " << t << " " << z;
    EXPECT_EQ(prob_cross(1.0, 1.0, 0.3), 0.0);
    EXPECT_NEAR(prob_cross(0.0, 2.0, -0.5), Phi(-0.5 / std::sqrt(2.0)), 1e-15);
    EXPECT_EQ(prob_cross(0.0, 2.0, 0.5), 0.0);
}

TEST(Limits, SigmaSquaresSingleTime) {
    const std::vector<double> theta{1.0}, times{1.0};
    const auto sq = sigma_squares(theta, times, 1.0, 1.0, 1.0);
    EXPECT_TRUE(sq.converged);
    EXPECT_NEAR(sq.sigma1_sq + sq.sigma2_sq, std::sqrt(2.0 / std::numbers::pi), 1e-8);
    EXPECT_NEAR(sq.sigma1_sq, sq.sigma2_sq, 1e-8);
}

TEST(Limits, SigmaSquaresZeroTheta) {
    const std::vector<double> theta{0.0, 0.0}, times{1.0, 2.0};
    const auto sq = sigma_squares(theta, times, 1.0, 1.0, 1.0);
    EXPECT_EQ(sq.sigma1_sq, 0.0);
    EXPECT_EQ(sq.sigma2_sq, 0.0);
}

TEST(Limits, SigmaSquaresDeterministicTwoTimes) {
    const std::vector<double> theta{1.0, 1.0}, times{1.0, 2.0};
    const auto sq = sigma_squares(theta, times, 1.0, 0.0, 1.0);
    const auto k = CovKernel::deterministic_ic(1.0, 1.0);
    EXPECT_NEAR(sq.sigma1_sq + sq.sigma2_sq, k(1, 1) + 2.0 * k(1, 2) + k(2, 2), 1e-8);
    EXPECT_NEAR(sq.sigma1_sq, sq.sigma2_sq, 1e-6);
}

TEST(Limits, SigmaSquaresMatchGeneralKernel) {
    RngStream rng(4);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> theta(3), times(3);
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            theta[i] = 2.0 * rng.uniform() - 1.0;
            acc += 0.2 + 2.0 * rng.uniform();
            times[i] = acc;
        }
        const double rho = 0.5 + rng.uniform(), v = 2.0 * rng.uniform(), k2 = 0.5 + rng.uniform();
        const auto sq = sigma_squares(theta, times, rho, v, k2);
        const auto k = CovKernel::general(rho, v, k2);
        double expected = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) expected += theta[i] * theta[j] * k(times[i], times[j]);
        EXPECT_NEAR(sq.sigma1_sq + sq.sigma2_sq, expected, 1e-8);
        EXPECT_NEAR(sq.sigma1_sq, sq.sigma2_sq, 1e-6);
    }
}

TEST(Limits, SigmaSquaresValidation) {
    const std::vector<double> theta{1.0, 1.0};
    EXPECT_THROW(sigma_squares(theta, std::vector<double>{2.0, 1.0}, 1, 1, 1), std::invalid_argument);
    EXPECT_THROW(sigma_squares(theta, std::vector<double>{0.0, 1.0}, 1, 1, 1), std::invalid_argument);
    EXPECT_THROW(sigma_squares(theta, std::vector<double>{1.0}, 1, 1, 1), std::invalid_argument);
}

TEST(Limits, TransportSolution) {
    EXPECT_NEAR(transport_solution(Profile::linear(1.0), 0.4, 1.0, 1.0), 0.6, 1e-15);
    const auto p = Profile::smoothstep(0.5, 1.0, 0.0, 1.0);
    EXPECT_EQ(transport_solution(p, 0.4, 0.3, 0.0), p.u0(0.3));
    EXPECT_EQ(transport_solution(p, 0.0, 0.3, 7.0), p.u0(0.3));
}

TEST(Limits, SamplerZeroAtOrigin) {
    const auto k = CovKernel::equilibrium(1.0, 1.0);
    RngStream rng(5);
    for (int i = 0; i < 50; ++i) {
        EXPECT_EQ(sample_limit_process(k, {0.0}, rng)[0], 0.0);
        EXPECT_EQ(sample_limit_process(k, {0.0, 1.0}, rng)[0], 0.0);
    }
}

TEST(Limits, SamplerCovariance) {
    const auto k = CovKernel::general(1.0, 1.7, 1.0);
    const std::vector<double> times{0.5, 1.0, 1.01, 3.0};
    const LimitProcessSampler sampler(k, times);
    RngStream rng(6);
    const int r = 100000;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < r; ++i) {
        const auto z = sampler.draw(rng);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) acc(a, b) += z[static_cast<std::size_t>(a)] * z[static_cast<std::size_t>(b)];
    }
    acc /= r;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const double kab = k(times[static_cast<std::size_t>(a)], times[static_cast<std::size_t>(b)]);
            const double se = std::sqrt((kab * kab + k(times[static_cast<std::size_t>(a)], times[static_cast<std::size_t>(a)]) *
                                                        k(times[static_cast<std::size_t>(b)], times[static_cast<std::size_t>(b)])) /
                                        r);
            EXPECT_NEAR(acc(a, b), kab, 4.0 * se);
        }
}

TEST(Limits, SamplerRejectsIndefiniteAndOversized) {
    EXPECT_THROW(LimitProcessSampler(CovKernel::equilibrium(1.0, 1.0), std::vector<double>(5000, 1.0)), std::invalid_argument);
}

TEST(Limits, KernelCsv) {
    std::ostringstream os;
    const std::vector<double> times{0.0, 1.0};
    write_kernel_csv(os, CovKernel::brownian(1.0), times);
    const std::string csv = os.str();
    EXPECT_EQ(csv.substr(0, 6), "s,t,K\n");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
