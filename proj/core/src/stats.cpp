#include "charflux/stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace charflux {

namespace {

constexpr std::size_t kBatches = 20;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

double jackknife_se(const std::vector<double>& leave_one_out) {
    const auto r = static_cast<double>(leave_one_out.size());
    const double mean = std::accumulate(leave_one_out.begin(), leave_one_out.end(), 0.0) / r;
    double ss = 0.0;
    for (double v : leave_one_out) ss += (v - mean) * (v - mean);
    return std::sqrt((r - 1.0) / r * ss);
}

std::vector<double> logs(std::span<const double> v, const char* what) {
    std::vector<double> out;
    out.reserve(v.size());
    for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be positive and finite");
        out.push_back(std::log(x));
    }
    return out;
}

}  // namespace

EnsembleAccumulator::EnsembleAccumulator(std::int64_t n, std::vector<double> times, std::vector<double> base_points)
    : n_(n), times_(std::move(times)), base_points_(std::move(base_points)) {
    if (n_ < 1) throw std::invalid_argument("accumulator: n must be >= 1");
    const std::size_t d = times_.size() * base_points_.size();
    if (d == 0) throw std::invalid_argument("accumulator: empty grid");
    sum_.assign(d, 0);
    cross_.assign(d * d, 0);
}

void EnsembleAccumulator::accumulate(std::uint64_t replicate, const CurrentPath& path) {
    if (path.times != times_ || path.base_points != base_points_) throw std::invalid_argument("accumulator: path grid does not match");
    std::vector<std::int64_t> values;
    values.reserve(dim());
    for (const auto& row : path.current) values.insert(values.end(), row.begin(), row.end());
    add(replicate, std::move(values));
}

void EnsembleAccumulator::add(std::uint64_t replicate, std::vector<std::int64_t> values) {
    const std::size_t d = dim();
    if (values.size() != d) throw std::invalid_argument("accumulator: value vector has the wrong length");
    if (rows_.contains(replicate)) throw std::invalid_argument("accumulator: replicate index already present");
    for (std::size_t p = 0; p < d; ++p) {
        sum_[p] += values[p];
        for (std::size_t q = 0; q < d; ++q) cross_[p * d + q] += values[p] * values[q];
    }
    rows_.emplace(replicate, std::move(values));
}

void EnsembleAccumulator::check_compatible(const EnsembleAccumulator& other) const {
    if (other.n_ != n_ || other.times_ != times_ || other.base_points_ != base_points_) throw std::invalid_argument("accumulator: grid mismatch on merge");
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& other) {
    check_compatible(other);
    for (const auto& [index, _] : other.rows_)
        if (rows_.contains(index)) throw std::invalid_argument("accumulator: overlapping replicate indices on merge");
    for (const auto& [index, values] : other.rows_) rows_.emplace(index, values);
    for (std::size_t p = 0; p < sum_.size(); ++p) sum_[p] += other.sum_[p];
    for (std::size_t p = 0; p < cross_.size(); ++p) cross_[p] += other.cross_[p];
}

EnsembleSummary EnsembleAccumulator::finalize() const {
    EnsembleSummary s;
    s.n = n_;
    s.times = times_;
    s.base_points = base_points_;
    s.replicates = static_cast<std::int64_t>(rows_.size());
    const std::size_t d = dim();
    s.mean.assign(d, kNaN);
    s.mean_se.assign(d, kNaN);
    s.cov.assign(d, std::vector<double>(d, kNaN));
    s.cov_se = s.cov;
    s.cov_batch_se = s.cov;
    if (rows_.size() < 2) return s;
    s.defined = true;

    const auto r = static_cast<double>(rows_.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_));  // (n^{-1/4})^2
    const double amp = std::pow(static_cast<double>(n_), -0.25);
    for (std::size_t p = 0; p < d; ++p) {
        const double m = static_cast<double>(sum_[p]) / r;
        s.mean[p] = amp * m;
        for (std::size_t q = 0; q < d; ++q)
            s.cov[p][q] = scale * (static_cast<double>(cross_[p * d + q]) / r - m * static_cast<double>(sum_[q]) / r);
    }
    for (std::size_t p = 0; p < d; ++p) s.mean_se[p] = std::sqrt(std::max(s.cov[p][p], 0.0) * r / (r - 1.0) / r);

    std::vector<std::vector<double>> loo(d * d, std::vector<double>());
    for (auto& v : loo) v.reserve(rows_.size());
    for (const auto& [_, x] : rows_) {
        for (std::size_t p = 0; p < d; ++p) {
            const double mp = (static_cast<double>(sum_[p] - x[p])) / (r - 1.0);
            for (std::size_t q = p; q < d; ++q) {
                const double mq = (static_cast<double>(sum_[q] - x[q])) / (r - 1.0);
                const double c = static_cast<double>(cross_[p * d + q] - x[p] * x[q]) / (r - 1.0) - mp * mq;
                loo[p * d + q].push_back(scale * c);
            }
        }
    }
    for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = p; q < d; ++q) s.cov_se[p][q] = s.cov_se[q][p] = jackknife_se(loo[p * d + q]);

    if (rows_.size() >= 2 * kBatches) {
        std::vector<const std::vector<std::int64_t>*> ordered;
        ordered.reserve(rows_.size());
        for (const auto& [_, x] : rows_) ordered.push_back(&x);
        const std::size_t per = ordered.size() / kBatches;
        std::vector<std::vector<double>> batch(d * d);
        for (std::size_t b = 0; b < kBatches; ++b) {
            const std::size_t lo = b * per;
            const std::size_t hi = (b + 1 == kBatches) ? ordered.size() : lo + per;
            const auto m = static_cast<double>(hi - lo);
            std::vector<double> bs(d, 0.0);
            std::vector<double> bc(d * d, 0.0);
            for (std::size_t k = lo; k < hi; ++k) {
                const auto& x = *ordered[k];
                for (std::size_t p = 0; p < d; ++p) {
                    bs[p] += static_cast<double>(x[p]);
                    for (std::size_t q = p; q < d; ++q) bc[p * d + q] += static_cast<double>(x[p] * x[q]);
                }
            }
            for (std::size_t p = 0; p < d; ++p)
                for (std::size_t q = p; q < d; ++q) batch[p * d + q].push_back(scale * (bc[p * d + q] / m - bs[p] * bs[q] / (m * m)));
        }
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p; q < d; ++q) {
                const auto& v = batch[p * d + q];
                const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(kBatches);
                double ss = 0.0;
                for (double e : v) ss += (e - mean) * (e - mean);
                s.cov_batch_se[p][q] = s.cov_batch_se[q][p] = std::sqrt(ss / static_cast<double>(kBatches - 1) / static_cast<double>(kBatches));
            }
    }
    return s;
}

void EnsembleAccumulator::save(std::ostream& out) const {
    out << "charflux-ensemble 1 " << n_ << ' ' << times_.size() << ' ' << base_points_.size() << ' ' << rows_.size() << '\n';
    out.precision(17);
    for (double t : times_) out << t << ' ';
    out << '\n';
    for (double y : base_points_) out << y << ' ';
    out << '\n';
    for (const auto& [index, values] : rows_) {
        out << index;
        for (std::int64_t v : values) out << ' ' << v;
        out << '\n';
    }
}

EnsembleAccumulator EnsembleAccumulator::load(std::istream& in) {
    std::string magic;
    int version = 0;
    std::int64_t n = 0;
    std::size_t nt = 0;
    std::size_t nb = 0;
    std::size_t count = 0;
    if (!(in >> magic >> version >> n >> nt >> nb >> count) || magic != "charflux-ensemble" || version != 1)
        throw std::runtime_error("checkpoint: unrecognised header");
    std::vector<double> times(nt);
    std::vector<double> bases(nb);
    for (double& t : times) in >> t;
    for (double& y : bases) in >> y;
    EnsembleAccumulator acc(n, times, bases);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t index = 0;
        std::vector<std::int64_t> values(acc.dim());
        in >> index;
        for (auto& v : values) in >> v;
        if (!in) throw std::runtime_error("checkpoint: truncated replicate rows");
        acc.add(index, std::move(values));
    }
    return acc;
}

std::vector<CovarianceCell> compare_covariance(const EnsembleSummary& summary, std::size_t base, const CovKernel& kernel) {
    if (base >= summary.base_points.size()) throw std::out_of_range("compare_covariance: base index out of range");
    std::vector<CovarianceCell> cells;
    const auto& times = summary.times;
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = i; j < times.size(); ++j) {
            const std::size_t p = summary.index(base, i);
            const std::size_t q = summary.index(base, j);
            CovarianceCell c{times[i], times[j], summary.cov[p][q], kernel(times[i], times[j]), summary.cov_se[p][q], 0.0};
            c.z = c.se > 0.0 ? (c.empirical - c.theoretical) / c.se : (c.empirical == c.theoretical ? 0.0 : kNaN);
            cells.push_back(c);
        }
    return cells;
}

void write_comparison_csv(std::ostream& out, std::span<const CovarianceCell> cells) {
    out << "s,t,empirical,theoretical,se,z\n";
    for (const auto& c : cells) out << c.s << ',' << c.t << ',' << c.empirical << ',' << c.theoretical << ',' << c.se << ',' << c.z << '\n';
}

std::size_t count_exceeding(std::span<const CovarianceCell> cells, double threshold) {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [&](const CovarianceCell& c) { return !(std::fabs(c.z) <= threshold); }));
}

Regression least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need at least two paired points");
    const auto k = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares: x values are all equal");
    Regression r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e = y[i] - r.intercept - r.slope * x[i];
            rss += e * e;
        }
        r.stderr_slope = std::sqrt(rss / (k - 2.0) / sxx);
    }
    return r;
}

Regression scaling_exponent(std::span<const double> ns, std::span<const double> sds) {
    if (ns.size() != sds.size()) throw std::invalid_argument("scaling_exponent: ns and sds differ in length");
    if (std::set<double>(ns.begin(), ns.end()).size() < 3) throw std::invalid_argument("scaling_exponent: need at least 3 distinct n");
    const auto lx = logs(ns, "n");
    const auto ly = logs(sds, "standard deviations");
    return least_squares(lx, ly);
}

Regression hydro_error(std::span<const double> ns, std::span<const double> errors) {
    if (ns.size() != errors.size()) throw std::invalid_argument("hydro_error: ns and errors differ in length");
    if (ns.size() < 3) throw std::invalid_argument("hydro_error: need at least 3 n values");
    const auto lx = logs(ns, "n");
    const auto ly = logs(errors, "errors");
    return least_squares(lx, ly);
}

IndependenceReport independence_test(const EnsembleAccumulator& ensemble) {
    const std::size_t nb = ensemble.base_points().size();
    const std::size_t nt = ensemble.times().size();
    if (nb < 2) throw std::invalid_argument("independence_test: need at least 2 base points");
    if (ensemble.count() < 3) throw std::invalid_argument("independence_test: need at least 3 replicates");
    const std::size_t d = ensemble.dim();
    const auto& sum = ensemble.sums();
    const auto& cross = ensemble.cross_sums();
    const auto r = static_cast<double>(ensemble.count());

    const auto corr_from = [&](double r_eff, double sp, double sq, double spp, double sqq, double spq) {
        const double mp = sp / r_eff;
        const double mq = sq / r_eff;
        const double vp = spp / r_eff - mp * mp;
        const double vq = sqq / r_eff - mq * mq;
        if (vp <= 0.0 || vq <= 0.0) return kNaN;
        return (spq / r_eff - mp * mq) / std::sqrt(vp * vq);
    };
    const auto f = [](std::int64_t v) { return static_cast<double>(v); };

    IndependenceReport report;
    for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = a + 1; b < nb; ++b)
            for (std::size_t i = 0; i < nt; ++i)
                for (std::size_t j = 0; j < nt; ++j) {
                    const std::size_t p = a * nt + i;
                    const std::size_t q = b * nt + j;
                    CorrelationCell cell{a, b, ensemble.times()[i], ensemble.times()[j], 0.0, 0.0};
                    cell.corr = corr_from(r, f(sum[p]), f(sum[q]), f(cross[p * d + p]), f(cross[q * d + q]), f(cross[p * d + q]));
                    std::vector<double> loo;
                    loo.reserve(ensemble.count());
                    for (const auto& [_, x] : ensemble.rows()) {
                        loo.push_back(corr_from(r - 1.0, f(sum[p] - x[p]), f(sum[q] - x[q]), f(cross[p * d + p] - x[p] * x[p]),
                                                f(cross[q * d + q] - x[q] * x[q]), f(cross[p * d + q] - x[p] * x[q])));
                    }
                    cell.se = jackknife_se(loo);
                    if (std::isfinite(cell.corr)) {
                        report.max_abs_corr = std::max(report.max_abs_corr, std::fabs(cell.corr));
                        if (cell.se > 0.0) report.max_abs_z = std::max(report.max_abs_z, std::fabs(cell.corr) / cell.se);
                    }
                    report.cells.push_back(cell);
                }
    return report;
}

SpreadEstimate spread(std::span<const double> values) {
    SpreadEstimate s;
    s.count = values.size();
    if (values.empty()) return s;
    const auto k = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
    if (values.size() < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (k - 1.0));
    s.sd_se = s.sd / std::sqrt(2.0 * (k - 1.0));
    return s;
}

SpreadEstimate transported_fluctuation_check(std::span<const std::int64_t> height_minus_origin, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("transported_fluctuation_check: n must be >= 1");
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> residual;
    residual.reserve(height_minus_origin.size());
    for (std::int64_t v : height_minus_origin) residual.push_back(scale * static_cast<double>(v));
    return spread(residual);
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double bootstrap_quantile_se(std::span<const double> values, double p, std::size_t resamples, RngStream rng) {
    if (values.empty() || resamples < 2) throw std::invalid_argument("bootstrap_quantile_se: need data and at least 2 resamples");
    std::vector<double> estimates;
    estimates.reserve(resamples);
    std::vector<double> sample(values.size());
    for (std::size_t b = 0; b < resamples; ++b) {
        for (auto& v : sample) v = values[std::min(values.size() - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(values.size())))];
        estimates.push_back(quantile(sample, p));
    }
    return spread(estimates).sd;
}

}  // namespace charflux
