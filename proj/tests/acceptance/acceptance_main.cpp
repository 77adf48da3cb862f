// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "charflux/charflux.hpp"

using namespace charflux;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

const JumpKernel kKernel = JumpKernel::nearest_neighbour(0.7);  // kappa2 = 1, drift 0.4

EnsembleAccumulator run_ensemble(const SimConfig& config, std::size_t replicates, std::uint64_t seed) {
    const WalkSimulator sim(config);
    EnsembleAccumulator acc(config.n, config.times, config.base_points);
    const RngStream root(seed);
    for (std::size_t r = 0; r < replicates; ++r) acc.accumulate(r, sim.simulate_replicate(root.child(r)));
    return acc;
}

SimConfig equilibrium_config(std::int64_t n, std::vector<double> times, std::vector<double> bases) {
    SimConfig c;
    c.n = n;
    c.times = std::move(times);
    c.base_points = std::move(bases);
    c.kernel = kKernel;
    c.profile = Profile::linear(1.0);
    c.ic = IcKind::random;
    c.law = OccupationLaw::poisson;
    return c;
}

Outcome c1_equilibrium_variance() {
    const auto acc = run_ensemble(equilibrium_config(1600, {1.0}, {0.0}), 10000, 101);
    const auto s = acc.finalize();
    const double target = std::sqrt(2.0 / std::numbers::pi);
    const double rel = std::fabs(s.cov[0][0] / target - 1.0);
    return {rel <= 0.05, fmt("var=%.4f target=%.4f rel.err=%.3f (tol 0.05) se=%.4f", s.cov[0][0], target, rel, s.cov_se[0][0])};
}

Outcome c2_full_covariance() {
    struct Regime {
        const char* name;
        double ratio;
        OccupationLaw law;
    };
    const Regime regimes[] = {{"v<rho", 0.5, OccupationLaw::binomial_thinned}, {"v=rho", 1.0, OccupationLaw::poisson}, {"v>rho", 2.0, OccupationLaw::poisson_mixture}};
    std::size_t cells = 0, exceed = 0;
    double worst = 0.0;
    std::uint64_t seed = 201;
    for (const auto& r : regimes) {
        auto c = equilibrium_config(1600, {0.5, 1.0, 2.0}, {0.0});
        c.profile = Profile::linear(1.0, r.ratio);
        c.law = r.law;
        const auto s = run_ensemble(c, 10000, seed++).finalize();
        const auto cmp = compare_covariance(s, 0, CovKernel::general(1.0, r.ratio, kKernel.kappa2()));
        cells += cmp.size();
        exceed += count_exceeding(cmp, 3.0);
        for (const auto& cell : cmp) worst = std::max(worst, std::fabs(cell.z));
    }
    return {cells == 18 && exceed <= 1, fmt("cells=%zu beyond 3 SE=%zu (allowed 1) max|z|=%.2f", cells, exceed, worst)};
}

Outcome c3_deterministic_ic() {
    auto c = equilibrium_config(1600, {0.5, 1.0, 2.0}, {0.0});
    c.ic = IcKind::staircase;
    const auto s = run_ensemble(c, 10000, 301).finalize();
    const double scale = std::sqrt(kKernel.kappa2() / (2.0 * std::numbers::pi));
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < 3; ++i) {
        const double t = c.times[i];
        const double target = scale * std::sqrt(2.0 * t);
        const double z = (s.cov[i][i] - target) / s.cov_se[i][i];
        ok = ok && std::fabs(z) <= 3.0;
        detail += fmt("t=%.1f var=%.4f target=%.4f z=%.2f; ", t, s.cov[i][i], target, z);
    }
    return {ok, detail};
}

Outcome c4_scaling_exponent() {
    const std::vector<double> ns{200, 800, 3200};
    std::vector<double> sds;
    std::uint64_t seed = 401;
    for (double n : ns) {
        const auto acc = run_ensemble(equilibrium_config(static_cast<std::int64_t>(n), {1.0}, {0.0}), 4000, seed++);
        std::vector<double> ys;
        for (const auto& [i, v] : acc.rows()) ys.push_back(static_cast<double>(v[0]));
        sds.push_back(spread(ys).sd);
    }
    const auto fit = scaling_exponent(ns, sds);
    return {fit.slope >= 0.22 && fit.slope <= 0.28, fmt("slope=%.4f (band [0.22, 0.28]) se=%.4f sd=(%.2f, %.2f, %.2f)", fit.slope, fit.stderr_slope, sds[0], sds[1], sds[2])};
}

Outcome c5_independence() {
    const auto acc = run_ensemble(equilibrium_config(1600, {0.5, 1.0, 2.0}, {0.0, 1.0}), 10000, 501);
    const auto rep = independence_test(acc);
    return {rep.max_abs_z <= 3.0, fmt("cells=%zu max|corr|=%.4f max|z|=%.2f (tol 3)", rep.cells.size(), rep.max_abs_corr, rep.max_abs_z)};
}

Outcome c6_hydrodynamic() {
    const std::vector<double> ns{400, 1600, 6400};
    const std::vector<double> xs{-0.25, 0.25, 0.75};
    const auto profile = Profile::smoothstep(0.5, 1.0, -0.5, 0.5);
    const double t = 1.0;
    const std::size_t replicates = 2000;
    std::vector<double> errors, residual_sd;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        const auto n = static_cast<std::int64_t>(ns[k]);
        SimConfig c = equilibrium_config(n, {t}, {0.0});
        c.profile = profile;
        c.height_points = xs;
        const WalkSimulator sim(c);
        const RngStream root(601 + k);
        double abs_err = 0.0;
        std::vector<std::int64_t> residual;
        for (std::size_t r = 0; r < replicates; ++r) {
            const auto path = sim.simulate_replicate(root.child(r));
            for (std::size_t j = 0; j < xs.size(); ++j) {
                const double exact = transport_solution(profile, kKernel.drift(), xs[j], t);
                abs_err += std::fabs(static_cast<double>(path.heights[j][0]) / ns[k] - exact);
            }
            residual.push_back(path.heights[1][0] - path.heights_origin[1][0]);
        }
        errors.push_back(abs_err / static_cast<double>(replicates * xs.size()));
        residual_sd.push_back(transported_fluctuation_check(residual, n).sd);
    }
    const auto fit = hydro_error(ns, errors);
    const double target = std::pow(4.0, -0.25);
    const double r1 = residual_sd[1] / residual_sd[0];
    const double r2 = residual_sd[2] / residual_sd[1];
    const bool ratios_ok = std::fabs(r1 / target - 1.0) <= 0.2 && std::fabs(r2 / target - 1.0) <= 0.2;
    return {fit.slope <= -0.4 && ratios_ok,
            fmt("error slope=%.3f (need <= -0.4); residual SD ratios %.3f, %.3f vs %.3f +/- 20%%", fit.slope, r1, r2, target)};
}

Outcome c7_brownian_current() {
    const double lambda = 100.0;
    const std::vector<double> times{1.0, 2.0};
    const double w = brownian_min_halfwidth(times);
    EnsembleAccumulator acc(1, times, {0.0});
    const RngStream root(701);
    for (std::size_t r = 0; r < 10000; ++r) acc.accumulate(r, simulate_brownian_current(lambda, 0.0, times, w, root.child(r)));
    const auto cmp = compare_covariance(acc.finalize(), 0, CovKernel::brownian(lambda));
    double worst = 0.0;
    for (const auto& c : cmp) worst = std::max(worst, std::fabs(c.z));
    return {worst <= 3.0, fmt("cells=%zu max|z|=%.2f (tol 3)", cmp.size(), worst)};
}

Outcome c8_closed_forms() {
    std::vector<double> grid;
    for (int i = 0; i < 7; ++i) grid.push_back(std::pow(10.0, -2.0 + 4.0 * i / 6.0));
    double quad_err = 0.0;
    for (double a : grid)
        for (double b : grid) {
            const double s = std::min(a, b), t = std::max(a, b);
            const auto c = gaussian_integrals(s, t);
            const auto q = gaussian_integrals_quadrature(s, t);
            quad_err = std::max({quad_err, std::fabs(c.full - q.full), std::fabs(c.half - q.half), std::fabs(c.cross - q.cross)});
        }
    RngStream rng(801);
    double sigma_gap = 0.0;
    for (int k = 0; k < 5; ++k) {
        const auto m = 1 + static_cast<std::size_t>(rng.uniform() * 4);
        std::vector<double> theta(m), times(m);
        double t = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            theta[i] = standard_normal(rng);
            t += 0.1 + rng.uniform();
            times[i] = t;
        }
        const auto sq = sigma_squares(theta, times, 0.2 + 2.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform(), 0.5 + 1.5 * rng.uniform());
        sigma_gap = std::max(sigma_gap, std::fabs(sq.sigma1_sq - sq.sigma2_sq));
    }
    std::size_t psd_fail = 0;
    for (int k = 0; k < 40; ++k) {
        const auto m = 2 + static_cast<std::size_t>(rng.uniform() * 63);
        std::vector<double> times(m);
        for (auto& x : times) x = 10.0 * rng.uniform();
        std::sort(times.begin(), times.end());
        for (const auto& kern : {CovKernel::general(1.0 + rng.uniform(), 2.0 * rng.uniform(), 1.0), CovKernel::equilibrium(1.0, 1.0), CovKernel::deterministic_ic(1.0, 1.0),
                                 CovKernel::brownian(50.0)})
            if (!is_psd(gram_matrix(kern, times))) ++psd_fail;
    }
    return {quad_err <= 1e-8 && sigma_gap <= 1e-6 && psd_fail == 0,
            fmt("max quadrature err=%.2e (tol 1e-8); max |s1^2 - s2^2|=%.2e (tol 1e-6); non-PSD grams=%zu", quad_err, sigma_gap, psd_fail)};
}

Outcome c9_fbm_sampler() {
    std::vector<double> times;
    for (int k = 0; k < 8; ++k) times.push_back(std::pow(4.0, k / 7.0));
    const auto kernel = CovKernel::equilibrium(1.0, 1.0);
    const LimitProcessSampler sampler(kernel, times);
    const std::size_t draws = 100000, m = times.size();
    std::vector<double> sum(m, 0.0), cross(m * m, 0.0);
    RngStream rng(901);
    for (std::size_t r = 0; r < draws; ++r) {
        const auto z = sampler.draw(rng);
        for (std::size_t i = 0; i < m; ++i) {
            sum[i] += z[i];
            for (std::size_t j = 0; j < m; ++j) cross[i * m + j] += z[i] * z[j];
        }
    }
    const double d = static_cast<double>(draws);
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double c = cross[i * m + j] / d - sum[i] * sum[j] / (d * d);
            worst = std::max(worst, std::fabs(c / kernel(times[i], times[j]) - 1.0));
        }
    const double v1 = cross[0] / d - sum[0] * sum[0] / (d * d);
    const double v4 = cross[(m - 1) * m + m - 1] / d - sum[m - 1] * sum[m - 1] / (d * d);
    const double ratio = v4 / v1;
    return {worst <= 0.02 && std::fabs(ratio / 2.0 - 1.0) <= 0.03,
            fmt("max entrywise rel.err=%.4f (tol 0.02); Var Z(4)/Var Z(1)=%.4f (2 +/- 3%%)", worst, ratio)};
}

Outcome c10_pathwise_identity() {
    const std::vector<JumpKernel> kernels{JumpKernel::nearest_neighbour(0.7), JumpKernel::nearest_neighbour(0.5), JumpKernel::nearest_neighbour(0.2),
                                          JumpKernel({{-2, 0.2}, {1, 0.5}, {3, 0.3}})};
    struct Ic {
        Profile profile;
        IcKind kind;
        OccupationLaw law;
    };
    const std::vector<Ic> ics{{Profile::linear(1.0), IcKind::random, OccupationLaw::poisson},
                              {Profile::linear(1.0, 2.0), IcKind::random, OccupationLaw::poisson_mixture},
                              {Profile::linear(1.0, 0.5), IcKind::random, OccupationLaw::binomial_thinned},
                              {Profile::linear(1.0), IcKind::staircase, OccupationLaw::poisson},
                              {Profile::smoothstep(0.5, 1.0, -0.5, 0.5), IcKind::random, OccupationLaw::poisson}};
    std::size_t replicates = 0, checks = 0, violations = 0;
    std::uint64_t seed = 1001;
    for (const auto& k : kernels)
        for (const auto& ic : ics) {
            SimConfig c;
            c.n = 150;
            c.times = {0.5, 1.0, 2.0};
            c.base_points = {-0.5, 0.0, 1.0};
            c.kernel = k;
            c.profile = ic.profile;
            c.ic = ic.kind;
            c.law = ic.law;
            const WalkSimulator sim(c);
            const RngStream root(seed++);
            for (std::size_t r = 0; r < 50; ++r, ++replicates) {
                const auto state = sim.simulate_state(root.child(r));
                for (std::size_t b = 0; b < c.base_points.size(); ++b)
                    for (std::size_t t = 0; t < c.times.size(); ++t, ++checks)
                        if (sim.current_from_particles(state, b, t) != sim.current_from_heights(state, b, t)) ++violations;
            }
        }
    return {violations == 0 && replicates >= 1000, fmt("replicates=%zu checks=%zu violations=%zu", replicates, checks, violations)};
}

std::int64_t lis_dp(const std::vector<PlanePoint>& pts) {
    std::vector<PlanePoint> sorted = pts;
    std::sort(sorted.begin(), sorted.end(), [](const PlanePoint& a, const PlanePoint& b) { return a.space < b.space; });
    std::vector<std::int64_t> best(sorted.size(), 1);
    std::int64_t out = 0;
    for (std::size_t a = 0; a < sorted.size(); ++a) {
        for (std::size_t b = 0; b < a; ++b)
            if (sorted[b].space < sorted[a].space && sorted[b].time < sorted[a].time) best[a] = std::max(best[a], best[b] + 1);
        out = std::max(out, best[a]);
    }
    return out;
}

Outcome c11_lis() {
    RngStream rng(1101);
    std::size_t mismatches = 0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<PlanePoint> pts(static_cast<std::size_t>(rng.uniform() * 201));
        for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
        if (lis_count(pts) != lis_dp(pts)) ++mismatches;
    }
    const std::size_t big = 1000000;
    const int repeats = 10;
    double ratio = 0.0;
    for (int k = 0; k < repeats; ++k) {
        std::vector<PlanePoint> pts(big);
        for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
        ratio += static_cast<double>(lis_count(pts)) / std::sqrt(static_cast<double>(big)) / repeats;
    }
    return {mismatches == 0 && std::fabs(ratio / 2.0 - 1.0) <= 0.03, fmt("DP mismatches=%zu/1000; mean LIS/sqrt(N) at N=1e6: %.4f (2 +/- 3%%)", mismatches, ratio)};
}

Outcome c12_hammersley_tightness() {
    const SecondOrderSetup setup;  // wedge initial profile, x = t = 1
    const std::vector<std::int64_t> ns{250, 500, 1000};
    const auto res = second_order_experiment(setup, ns, 500, RngStream(1201));
    std::vector<double> scaled, q99, q99_se;
    for (const auto& r : res) {
        scaled.push_back(r.sd / std::cbrt(static_cast<double>(r.n)));
        std::vector<double> norm;
        for (double y : r.values) norm.push_back(std::fabs(y) / r.normalizer);
        q99.push_back(r.q99);
        q99_se.push_back(bootstrap_quantile_se(norm, 0.99, 1000, RngStream(1202).child(static_cast<std::uint64_t>(r.n))));
    }
    const double spread_ratio = *std::max_element(scaled.begin(), scaled.end()) / *std::min_element(scaled.begin(), scaled.end());
    bool monotone = true;
    for (std::size_t k = 1; k < q99.size(); ++k)
        monotone = monotone && q99[k] <= q99[k - 1] + 2.0 * std::hypot(q99_se[k], q99_se[k - 1]);
    return {spread_ratio <= 1.5 && monotone, fmt("SD/n^(1/3)=(%.3f, %.3f, %.3f) max/min=%.3f (tol 1.5); q99=(%.3f, %.3f, %.3f) se=(%.3f, %.3f, %.3f)", scaled[0], scaled[1],
                                                 scaled[2], spread_ratio, q99[0], q99[1], q99[2], q99_se[0], q99_se[1], q99_se[2])};
}

Outcome c13_hopf_lax() {
    RngStream rng(1301);
    double dense_gap = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Profile p = k % 2 == 0 ? Profile::gaussian_bump(0.2 + rng.uniform(), 3.0 * rng.uniform(), rng.uniform() - 0.5, 0.05 + 0.3 * rng.uniform())
                                     : Profile::smoothstep(rng.uniform(), 2.0 * rng.uniform(), -1.0 + rng.uniform(), 0.1 + rng.uniform());
        const double x = 2.0 * rng.uniform() - 1.0, t = 0.05 + rng.uniform();
        const auto sol = hopf_lax(p, x, t);
        const auto [lo, hi] = hopf_lax_search_range(p, x, t);
        double dense = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 1000000; ++i) dense = std::min(dense, hopf_lax_phi(p, x, t, lo + (hi - lo) * i / 1e6));
        dense_gap = std::max(dense_gap, std::fabs(sol.u - dense));
    }
    double linear_gap = 0.0;
    for (double x : {-1.0, 0.0, 0.7, 2.5})
        for (double t : {0.1, 0.5, 1.0, 3.0}) linear_gap = std::max(linear_gap, std::fabs(hopf_lax(Profile::linear(1.0), x, t).u - (x - t)));
    double c1_gap = 0.0;
    for (double t : {0.25, 0.5, 1.0, 2.0})
        for (const auto& p : {Profile::linear(1.0), Profile::zero(), Profile::linear(0.3)}) {
            const auto sol = hopf_lax(p, 1.0, t);
            c1_gap = std::max(c1_gap, std::fabs(check_quadratic_growth(p, sol, 0.3).c1 - 1.0 / (4.0 * t)));
        }
    return {dense_gap <= 1e-8 && linear_gap <= 1e-12 && c1_gap <= 1e-6,
            fmt("dense-grid gap=%.2e (tol 1e-8); linear gap=%.2e; |c1 - 1/(4t)|=%.2e (tol 1e-6)", dense_gap, linear_gap, c1_gap)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"C1 equilibrium variance", c1_equilibrium_variance}, {"C2 full covariance", c2_full_covariance},
        {"C3 deterministic IC", c3_deterministic_ic},         {"C4 scaling exponent", c4_scaling_exponent},
        {"C5 independence", c5_independence},                 {"C6 hydrodynamic limit", c6_hydrodynamic},
        {"C7 Brownian current", c7_brownian_current},         {"C8 closed forms", c8_closed_forms},
        {"C9 fBm sampler", c9_fbm_sampler},                   {"C10 pathwise identity", c10_pathwise_identity},
        {"C11 Hammersley LIS", c11_lis},                      {"C12 Hammersley tightness", c12_hammersley_tightness},
        {"C13 Hopf-Lax", c13_hopf_lax},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", name, out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
