#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "charflux/tools/experiment.hpp"

namespace charflux::tools {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Verdict {
    std::string criterion;
    bool pass = false;
    std::string detail;
};

struct Context {
    const ExperimentConfig& config;
    const RunOptions& options;
    std::vector<Verdict> verdicts;
    bool interrupted = false;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    return out;
}

void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    const fs::path tmp = path.string() + ".tmp";
    {
        auto out = open_out(tmp);
        body(out);
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

/// Calls task(index) for every index in `todo` on `workers` threads; the first exception is rethrown.
void parallel_for(const std::vector<std::uint64_t>& todo, int workers, const std::function<void(std::size_t worker, std::uint64_t index)>& task) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto body = [&](std::size_t worker) {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= todo.size()) return;
            try {
                task(worker, todo[k]);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(todo.size());
                return;
            }
        }
    };
    const auto count = static_cast<std::size_t>(std::max(1, workers));
    if (count == 1) {
        body(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < count; ++w) threads.emplace_back(body, w);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

/**
 * Fills an accumulator with replicates 0..R-1 in checkpointed chunks. Each
 * worker owns a private accumulator; the main thread merges after every chunk.
 */
EnsembleAccumulator run_ensemble(Context& ctx, const std::string& label, EnsembleAccumulator acc,
                                 const std::function<std::vector<std::int64_t>(std::uint64_t)>& replicate) {
    const auto& c = ctx.config;
    const fs::path checkpoint = c.out / "checkpoints" / (label + ".txt");
    if (ctx.options.resume && fs::exists(checkpoint)) {
        std::ifstream in(checkpoint);
        auto loaded = EnsembleAccumulator::load(in);
        if (loaded.n() != acc.n() || loaded.times() != acc.times() || loaded.base_points() != acc.base_points())
            throw std::runtime_error("checkpoint " + checkpoint.string() + " does not match the configuration");
        acc = std::move(loaded);
    }
    const auto total = static_cast<std::uint64_t>(c.replicates);
    std::vector<std::uint64_t> pending;
    for (std::uint64_t r = 0; r < total; ++r)
        if (!acc.rows().contains(r)) pending.push_back(r);

    const auto chunk = static_cast<std::size_t>(c.checkpoint_every);
    for (std::size_t begin = 0; begin < pending.size(); begin += chunk) {
        const std::vector<std::uint64_t> todo(pending.begin() + static_cast<std::ptrdiff_t>(begin),
                                              pending.begin() + static_cast<std::ptrdiff_t>(std::min(pending.size(), begin + chunk)));
        std::vector<EnsembleAccumulator> local(static_cast<std::size_t>(c.workers), EnsembleAccumulator(acc.n(), acc.times(), acc.base_points()));
        parallel_for(todo, c.workers, [&](std::size_t w, std::uint64_t r) { local[w].add(r, replicate(r)); });
        for (const auto& part : local) acc.merge(part);
        fs::create_directories(checkpoint.parent_path());
        write_atomically(checkpoint, [&](std::ostream& out) { acc.save(out); });
        if (ctx.options.stop_after && static_cast<std::int64_t>(acc.count()) >= *ctx.options.stop_after && acc.count() < total) {
            ctx.interrupted = true;
            return acc;
        }
    }
    return acc;
}

SimConfig sim_config(const ExperimentConfig& c, std::int64_t n) {
    SimConfig sc;
    sc.n = n;
    sc.times = c.times;
    sc.base_points = c.base_points;
    sc.kernel = c.kernel;
    sc.profile = c.profile;
    sc.ic = c.ic;
    sc.law = c.law;
    sc.window_radius = c.window_radius;
    sc.height_points = c.height_points;
    return sc;
}

json window_json(const WalkSimulator& sim) {
    json w = {{"lo", sim.window().lo}, {"hi", sim.window().hi}, {"radius", sim.radius()}, {"recommended_radius", sim.recommended_radius()},
              {"truncation_bias", sim.truncation_bias()}};
    if (const auto note = sim.annotation()) w["annotation"] = *note;
    return w;
}

std::vector<std::int64_t> flatten(const CurrentPath& path) {
    std::vector<std::int64_t> v;
    for (const auto& row : path.current) v.insert(v.end(), row.begin(), row.end());
    return v;
}

void write_raw_currents(const fs::path& path, const EnsembleAccumulator& acc) {
    auto out = open_out(path);
    out << "n,replicate,base,time,Y\n";
    const auto& times = acc.times();
    const auto& bases = acc.base_points();
    for (const auto& [r, v] : acc.rows())
        for (std::size_t b = 0; b < bases.size(); ++b)
            for (std::size_t t = 0; t < times.size(); ++t) out << acc.n() << ',' << r << ',' << bases[b] << ',' << times[t] << ',' << v[b * times.size() + t] << '\n';
}

json summary_json(const EnsembleSummary& s) {
    return {{"n", s.n}, {"replicates", s.replicates}, {"defined", s.defined}, {"mean", s.mean}, {"mean_se", s.mean_se},
            {"cov", s.cov}, {"cov_se", s.cov_se}, {"cov_batch_se", s.cov_batch_se}};
}

json cells_json(std::span<const CovarianceCell> cells) {
    json out = json::array();
    for (const auto& c : cells) out.push_back({{"s", c.s}, {"t", c.t}, {"empirical", c.empirical}, {"theoretical", c.theoretical}, {"se", c.se}, {"z", c.z}});
    return out;
}

CovKernel walk_kernel(const ExperimentConfig& c, double base) {
    const double rho = c.profile.rho0(base);
    if (c.ic == IcKind::staircase) return CovKernel::deterministic_ic(rho, c.kernel.kappa2());
    return CovKernel::general(rho, c.profile.v0(base), c.kernel.kappa2());
}

EnsembleAccumulator walk_ensemble(Context& ctx, std::int64_t n, const WalkSimulator& sim) {
    const RngStream root = RngStream(ctx.config.seed).child(static_cast<std::uint64_t>(n));
    return run_ensemble(ctx, fmt("currents_n%lld", static_cast<long long>(n)), EnsembleAccumulator(n, ctx.config.times, ctx.config.base_points),
                        [&](std::uint64_t r) { return flatten(sim.simulate_replicate(root.child(r))); });
}

json run_covariance(Context& ctx) {
    const auto& c = ctx.config;
    json per_n = json::array();
    std::size_t cells_total = 0, beyond = 0;
    for (auto n : c.ns) {
        const WalkSimulator sim(sim_config(c, n));
        const auto acc = walk_ensemble(ctx, n, sim);
        if (ctx.interrupted) return {};
        const auto s = acc.finalize();
        json bases = json::array();
        for (std::size_t b = 0; b < c.base_points.size(); ++b) {
            const auto kernel = walk_kernel(c, c.base_points[b]);
            const auto cells = compare_covariance(s, b, kernel);
            cells_total += cells.size();
            beyond += count_exceeding(cells, 3.0);
            bases.push_back({{"base", c.base_points[b]}, {"kernel", kernel.describe()}, {"cells", cells_json(cells)}});
            auto out = open_out(c.out / fmt("covariance_n%lld_b%zu.csv", static_cast<long long>(n), b));
            write_comparison_csv(out, cells);
        }
        if (c.raw) write_raw_currents(c.out / fmt("raw_n%lld.csv", static_cast<long long>(n)), acc);
        per_n.push_back({{"n", n}, {"window", window_json(sim)}, {"summary", summary_json(s)}, {"bases", bases}});
    }
    const std::size_t budget = std::max<std::size_t>(1, (cells_total + 17) / 18);
    ctx.verdicts.push_back({"covariance within 3 jackknife SE", beyond <= budget, fmt("%zu of %zu cells beyond 3 SE (budget %zu)", beyond, cells_total, budget)});
    return {{"ensembles", per_n}};
}

json run_scaling(Context& ctx) {
    const auto& c = ctx.config;
    std::vector<double> ns, sds;
    json rows = json::array();
    for (auto n : c.ns) {
        const WalkSimulator sim(sim_config(c, n));
        const auto acc = walk_ensemble(ctx, n, sim);
        if (ctx.interrupted) return {};
        std::vector<double> ys;
        for (const auto& [r, v] : acc.rows()) ys.push_back(static_cast<double>(v[0]));
        const auto sp = spread(ys);
        ns.push_back(static_cast<double>(n));
        sds.push_back(sp.sd);
        rows.push_back({{"n", n}, {"mean", sp.mean}, {"sd", sp.sd}, {"sd_se", sp.sd_se}, {"window", window_json(sim)}});
        if (c.raw) write_raw_currents(c.out / fmt("raw_n%lld.csv", static_cast<long long>(n)), acc);
    }
    const auto fit = scaling_exponent(ns, sds);
    ctx.verdicts.push_back({"scaling exponent in [0.22, 0.28]", fit.slope >= 0.22 && fit.slope <= 0.28, fmt("slope %.4f (se %.4f, target 0.25)", fit.slope, fit.stderr_slope)});
    return {{"time", c.times.front()}, {"base", c.base_points.front()}, {"rows", rows}, {"slope", fit.slope}, {"slope_se", fit.stderr_slope}};
}

json run_independence(Context& ctx) {
    const auto& c = ctx.config;
    json per_n = json::array();
    bool ok = true;
    std::string detail;
    for (auto n : c.ns) {
        const WalkSimulator sim(sim_config(c, n));
        const auto acc = walk_ensemble(ctx, n, sim);
        if (ctx.interrupted) return {};
        const auto rep = independence_test(acc);
        json cells = json::array();
        for (const auto& cell : rep.cells)
            cells.push_back({{"base_a", c.base_points[cell.base_a]}, {"base_b", c.base_points[cell.base_b]}, {"s", cell.s}, {"t", cell.t}, {"corr", cell.corr}, {"se", cell.se}});
        ok = ok && rep.max_abs_z <= 3.0;
        detail += fmt("n=%lld max|z|=%.2f; ", static_cast<long long>(n), rep.max_abs_z);
        if (c.raw) write_raw_currents(c.out / fmt("raw_n%lld.csv", static_cast<long long>(n)), acc);
        per_n.push_back({{"n", n}, {"cells", cells}, {"max_abs_corr", rep.max_abs_corr}, {"max_abs_z", rep.max_abs_z}});
    }
    ctx.verdicts.push_back({"cross-characteristic correlations within 3 SE of 0", ok, detail});
    return {{"ensembles", per_n}};
}

json run_hydro(Context& ctx) {
    const auto& c = ctx.config;
    const std::size_t nx = c.height_points.size(), nt = c.times.size();
    // Pseudo base points: heights for each x followed by transported origins for each x.
    std::vector<double> labels = c.height_points;
    labels.insert(labels.end(), c.height_points.begin(), c.height_points.end());
    std::vector<double> ns, errors;
    std::vector<std::vector<double>> residual_sd;
    json rows = json::array();
    for (auto n : c.ns) {
        const WalkSimulator sim(sim_config(c, n));
        const RngStream root = RngStream(c.seed).child(static_cast<std::uint64_t>(n));
        const auto acc = run_ensemble(ctx, fmt("heights_n%lld", static_cast<long long>(n)), EnsembleAccumulator(n, c.times, labels), [&](std::uint64_t r) {
            const auto path = sim.simulate_replicate(root.child(r));
            std::vector<std::int64_t> v;
            for (const auto& row : path.heights) v.insert(v.end(), row.begin(), row.end());
            for (const auto& row : path.heights_origin) v.insert(v.end(), row.begin(), row.end());
            return v;
        });
        if (ctx.interrupted) return {};
        const double nd = static_cast<double>(n);
        double abs_err = 0.0;
        std::vector<double> sds;
        for (std::size_t j = 0; j < nx; ++j)
            for (std::size_t k = 0; k < nt; ++k) {
                const double exact = transport_solution(c.profile, c.kernel.drift(), c.height_points[j], c.times[k]);
                std::vector<std::int64_t> residual;
                for (const auto& [r, v] : acc.rows()) {
                    abs_err += std::fabs(static_cast<double>(v[j * nt + k]) / nd - exact);
                    residual.push_back(v[j * nt + k] - v[(nx + j) * nt + k]);
                }
                sds.push_back(transported_fluctuation_check(residual, n).sd);
            }
        const double mean_err = abs_err / static_cast<double>(acc.count() * nx * nt);
        ns.push_back(nd);
        errors.push_back(mean_err);
        residual_sd.push_back(sds);
        rows.push_back({{"n", n}, {"mean_abs_error", mean_err}, {"residual_sd", sds}, {"window", window_json(sim)}});
        if (c.raw) {
            auto out = open_out(c.out / fmt("raw_heights_n%lld.csv", static_cast<long long>(n)));
            out << "n,replicate,x,time,height,height_origin\n";
            for (const auto& [r, v] : acc.rows())
                for (std::size_t j = 0; j < nx; ++j)
                    for (std::size_t k = 0; k < nt; ++k) out << n << ',' << r << ',' << c.height_points[j] << ',' << c.times[k] << ',' << v[j * nt + k] << ',' << v[(nx + j) * nt + k] << '\n';
        }
    }
    const auto fit = hydro_error(ns, errors);
    ctx.verdicts.push_back({"hydrodynamic error slope <= -0.4", fit.slope <= -0.4, fmt("slope %.3f", fit.slope)});
    bool ratios_ok = true;
    double worst = 0.0;
    for (std::size_t k = 1; k < ns.size(); ++k) {
        const double target = std::pow(ns[k - 1] / ns[k], 0.25);
        for (std::size_t cell = 0; cell < residual_sd[k].size(); ++cell) {
            const double dev = std::fabs(residual_sd[k][cell] / residual_sd[k - 1][cell] / target - 1.0);
            worst = std::max(worst, dev);
            ratios_ok = ratios_ok && dev <= 0.2;
        }
    }
    ctx.verdicts.push_back({"transported residual SD ratio within 20% of (n/n')^(1/4)", ratios_ok, fmt("largest relative deviation %.3f", worst)});
    return {{"rows", rows}, {"slope", fit.slope}, {"slope_se", fit.stderr_slope}};
}

json run_brownian(Context& ctx) {
    const auto& c = ctx.config;
    const double w = brownian_min_halfwidth(c.times);
    const RngStream root(c.seed);
    const auto acc = run_ensemble(ctx, "brownian", EnsembleAccumulator(1, c.times, c.base_points), [&](std::uint64_t r) {
        std::vector<std::int64_t> v;
        for (std::size_t b = 0; b < c.base_points.size(); ++b) {
            const auto path = simulate_brownian_current(c.lambda, c.base_points[b], c.times, w, root.child(r).child(b));
            v.insert(v.end(), path.current[0].begin(), path.current[0].end());
        }
        return v;
    });
    if (ctx.interrupted) return {};
    const auto s = acc.finalize();
    const auto kernel = CovKernel::brownian(c.lambda);
    json bases = json::array();
    double worst = 0.0;
    for (std::size_t b = 0; b < c.base_points.size(); ++b) {
        const auto cells = compare_covariance(s, b, kernel);
        for (const auto& cell : cells) worst = std::max(worst, std::fabs(cell.z));
        bases.push_back({{"y", c.base_points[b]}, {"cells", cells_json(cells)}});
        auto out = open_out(c.out / fmt("covariance_b%zu.csv", b));
        write_comparison_csv(out, cells);
    }
    if (c.raw) write_raw_currents(c.out / "raw.csv", acc);
    ctx.verdicts.push_back({"Brownian current covariance within 3 SE", worst <= 3.0, fmt("max|z| %.2f", worst)});
    return {{"lambda", c.lambda}, {"halfwidth", w}, {"summary", summary_json(s)}, {"bases", bases}};
}

json run_fbm(Context& ctx) {
    const auto& c = ctx.config;
    const double base = c.base_points.empty() ? 0.0 : c.base_points.front();
    const double rho = c.profile.rho0(base), k2 = c.kernel.kappa2();
    const CovKernel kernel = c.cov_variant == "equilibrium"        ? CovKernel::equilibrium(rho, k2)
                             : c.cov_variant == "deterministic_ic" ? CovKernel::deterministic_ic(rho, k2)
                             : c.cov_variant == "brownian"         ? CovKernel::brownian(c.lambda)
                                                                   : CovKernel::general(rho, c.profile.v0(base), k2);
    const LimitProcessSampler sampler(kernel, c.times);
    const RngStream root(c.seed);
    const auto total = static_cast<std::size_t>(c.replicates);
    std::vector<std::vector<double>> draws(total);
    std::vector<std::uint64_t> todo(total);
    for (std::size_t r = 0; r < total; ++r) todo[r] = r;
    parallel_for(todo, c.workers, [&](std::size_t, std::uint64_t r) {
        RngStream rng = root.child(r);
        draws[r] = sampler.draw(rng);
    });
    const std::size_t m = c.times.size();
    std::vector<double> mean(m, 0.0);
    for (const auto& d : draws)
        for (std::size_t i = 0; i < m; ++i) mean[i] += d[i] / static_cast<double>(total);
    json cells = json::array();
    double worst = 0.0, zero_max = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (c.times[i] == 0.0)
            for (const auto& d : draws) zero_max = std::max(zero_max, std::fabs(d[i]));
        for (std::size_t j = i; j < m; ++j) {
            double cov = 0.0;
            for (const auto& d : draws) cov += (d[i] - mean[i]) * (d[j] - mean[j]);
            cov /= static_cast<double>(total);
            const double th = kernel(c.times[i], c.times[j]);
            json cell = {{"s", c.times[i]}, {"t", c.times[j]}, {"empirical", cov}, {"theoretical", th}};
            if (th > 0.0) {
                const double rel = std::fabs(cov / th - 1.0);
                worst = std::max(worst, rel);
                cell["relative_error"] = rel;
            }
            cells.push_back(cell);
        }
    }
    if (c.raw) {
        auto out = open_out(c.out / "raw.csv");
        out << "replicate,t,Z\n";
        for (std::size_t r = 0; r < total; ++r)
            for (std::size_t i = 0; i < m; ++i) out << r << ',' << c.times[i] << ',' << draws[r][i] << '\n';
    }
    {
        auto out = open_out(c.out / "kernel.csv");
        write_kernel_csv(out, kernel, c.times);
    }
    ctx.verdicts.push_back({"sampler covariance within 2% entrywise", worst <= 0.02, fmt("largest relative error %.4f over %zu draws", worst, total)});
    ctx.verdicts.push_back({"Z(0) = 0", zero_max == 0.0, fmt("max |Z(0)| %.3g", zero_max)});
    return {{"kernel", kernel.describe()}, {"cells", cells}};
}

json run_hammersley(Context& ctx) {
    const auto& c = ctx.config;
    SecondOrderSetup setup;
    setup.profile = c.profile;
    setup.ic = c.ic;
    setup.law = c.law;
    setup.x = c.x;
    setup.t = c.t;
    const auto solution = hopf_lax(c.profile, c.x, c.t);
    const RngStream root(c.seed);
    auto csv = open_out(c.out / "hammersley.csv");
    csv << "n,replicate,Y_n,normalizer\n";
    json rows = json::array();
    std::vector<double> scaled, q99, q99_se;
    for (auto n : c.ns) {
        const auto total = static_cast<std::size_t>(c.replicates);
        std::vector<double> values(total);
        std::vector<std::uint64_t> todo(total);
        for (std::size_t r = 0; r < total; ++r) todo[r] = r;
        const RngStream stream = root.child(static_cast<std::uint64_t>(n));
        parallel_for(todo, c.workers, [&](std::size_t, std::uint64_t r) { values[r] = second_order_replicate(setup, solution, n, stream.child(r)).y; });
        const double nd = static_cast<double>(n);
        const double normalizer = std::cbrt(nd) * std::log(nd);
        std::vector<double> norm;
        for (double y : values) norm.push_back(std::fabs(y) / normalizer);
        const auto sp = spread(values);
        const double se99 = bootstrap_quantile_se(norm, 0.99, static_cast<std::size_t>(c.bootstrap), root.child(0xB0075u).child(static_cast<std::uint64_t>(n)));
        scaled.push_back(sp.sd / std::cbrt(nd));
        q99.push_back(quantile(norm, 0.99));
        q99_se.push_back(se99);
        rows.push_back({{"n", n}, {"mean", sp.mean}, {"sd", sp.sd}, {"sd_over_cbrt_n", sp.sd / std::cbrt(nd)}, {"normalizer", normalizer},
                        {"q50", quantile(norm, 0.5)}, {"q90", quantile(norm, 0.9)}, {"q99", q99.back()}, {"q99_se", se99}});
        for (std::size_t r = 0; r < total; ++r) csv << n << ',' << r << ',' << values[r] << ',' << normalizer << '\n';
    }
    const double ratio = *std::max_element(scaled.begin(), scaled.end()) / *std::min_element(scaled.begin(), scaled.end());
    ctx.verdicts.push_back({"SD(Y_n)/n^(1/3) constant within factor 1.5", ratio <= 1.5, fmt("max/min %.3f", ratio)});
    bool monotone = true;
    for (std::size_t k = 1; k < q99.size(); ++k) monotone = monotone && q99[k] <= q99[k - 1] + 2.0 * std::hypot(q99_se[k], q99_se[k - 1]);
    ctx.verdicts.push_back({"q99 of |Y_n|/(n^(1/3) log n) non-increasing within 2 bootstrap SE", monotone, fmt("%zu sizes", q99.size())});
    json mins = solution.minimizers;
    return {{"u", solution.u}, {"minimizers", mins}, {"rows", rows}};
}

json run_hopf_lax_map(Context& ctx) {
    const auto& c = ctx.config;
    std::vector<HopfLaxSolution> sols;
    json rows = json::array();
    std::size_t checked = 0, holds = 0;
    for (double x : c.xs) {
        const auto sol = hopf_lax(c.profile, x, c.t);
        json row = {{"x", x}, {"u", sol.u}, {"shock", sol.shock}, {"minimizers", sol.minimizers}};
        if (!sol.shock) {
            const auto e = check_quadratic_growth(c.profile, sol, c.delta);
            row["c1"] = e.c1;
            row["quadratic_growth"] = e.ok;
            ++checked;
            holds += e.ok ? 1 : 0;
        }
        rows.push_back(row);
        sols.push_back(sol);
    }
    auto out = open_out(c.out / "hopf_lax.csv");
    write_hopf_lax_csv(out, sols);
    ctx.verdicts.push_back({"quadratic growth at non-shock minimizers", holds == checked, fmt("%zu of %zu points", holds, checked)});
    return {{"t", c.t}, {"rows", rows}};
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
    validate(config);
    fs::create_directories(config.out);
    Context ctx{config, options, {}, false};
    json results;
    switch (config.kind) {
        case ExperimentKind::rw_covariance: results = run_covariance(ctx); break;
        case ExperimentKind::rw_scaling: results = run_scaling(ctx); break;
        case ExperimentKind::rw_independence: results = run_independence(ctx); break;
        case ExperimentKind::rw_hydro: results = run_hydro(ctx); break;
        case ExperimentKind::brownian_current: results = run_brownian(ctx); break;
        case ExperimentKind::fbm_sample: results = run_fbm(ctx); break;
        case ExperimentKind::hammersley_tightness: results = run_hammersley(ctx); break;
        case ExperimentKind::hopf_lax_map: results = run_hopf_lax_map(ctx); break;
    }
    RunResult out;
    if (ctx.interrupted) {
        out.interrupted = true;
        return out;
    }
    json verdicts = json::array();
    for (const auto& v : ctx.verdicts) {
        verdicts.push_back({{"criterion", v.criterion}, {"pass", v.pass}, {"detail", v.detail}});
        out.all_pass = out.all_pass && v.pass;
    }
    out.summary = {{"schema_version", 1}, {"config", config.to_json()}, {"results", results}, {"verdicts", verdicts}, {"all_pass", out.all_pass}};
    write_atomically(config.out / "summary.json", [&](std::ostream& os) { os << out.summary.dump(2) << '\n'; });
    write_atomically(config.out / "verdict.txt", [&](std::ostream& os) {
        for (const auto& v : ctx.verdicts) os << (v.pass ? "PASS " : "FAIL ") << v.criterion << ": " << v.detail << '\n';
    });
    return out;
}

std::string csv_columns_help() {
    return "Output files (under --out):\n"
           "  summary.json            schema_version 1: config, results, verdicts\n"
           "  verdict.txt             one PASS/FAIL line per criterion\n"
           "  covariance_*.csv        s,t,empirical,theoretical,se,z\n"
           "  raw_n<N>.csv (--raw)    n,replicate,base,time,Y\n"
           "  raw_heights_n<N>.csv    n,replicate,x,time,height,height_origin (rw-hydro, --raw)\n"
           "  raw.csv (--raw)         n,replicate,base,time,Y (brownian-current); replicate,t,Z (fbm-sample)\n"
           "  kernel.csv              s,t,K (fbm-sample)\n"
           "  hammersley.csv          n,replicate,Y_n,normalizer\n"
           "  hopf_lax.csv            x,u,shock,minimizers (';'-separated)\n";
}

}  // namespace charflux::tools
