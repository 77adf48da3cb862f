#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "charflux/limits.hpp"
#include "charflux/rng.hpp"
#include "charflux/walks.hpp"

namespace charflux {

/**
 * Statistics of n^{-1/4} Y_n over an ensemble of replicates.
 *
 * Coordinates are flattened as base * times.size() + time. Covariances use
 * divisor R; standard errors are delete-1 jackknife (cov_se) and batch means
 * over 20 contiguous index batches (cov_batch_se).
 */
struct EnsembleSummary {
    std::int64_t n = 0;
    std::int64_t replicates = 0;
    std::vector<double> times;
    std::vector<double> base_points;
    bool defined = false;  // false when R < 2
    std::vector<double> mean;
    std::vector<double> mean_se;
    std::vector<std::vector<double>> cov;
    std::vector<std::vector<double>> cov_se;
    std::vector<std::vector<double>> cov_batch_se;

    [[nodiscard]] std::size_t dim() const noexcept { return mean.size(); }
    [[nodiscard]] std::size_t index(std::size_t base, std::size_t time) const noexcept { return base * times.size() + time; }
};

/**
 * Mergeable accumulator of integer replicate vectors.
 *
 * Keeps exact int64 first and second moment sums plus the rows themselves
 * keyed by replicate index, so merging is exact and order-independent.
 */
class EnsembleAccumulator {
public:
    EnsembleAccumulator(std::int64_t n, std::vector<double> times, std::vector<double> base_points);

    /// Adds Y_n(base, time) for every base point and time of `path`.
    void accumulate(std::uint64_t replicate, const CurrentPath& path);
    void add(std::uint64_t replicate, std::vector<std::int64_t> values);
    void merge(const EnsembleAccumulator& other);

    [[nodiscard]] std::size_t count() const noexcept { return rows_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return sum_.size(); }
    [[nodiscard]] std::int64_t n() const noexcept { return n_; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] const std::vector<double>& base_points() const noexcept { return base_points_; }
    [[nodiscard]] const std::map<std::uint64_t, std::vector<std::int64_t>>& rows() const noexcept { return rows_; }
    [[nodiscard]] const std::vector<std::int64_t>& sums() const noexcept { return sum_; }
    [[nodiscard]] const std::vector<std::int64_t>& cross_sums() const noexcept { return cross_; }

    [[nodiscard]] EnsembleSummary finalize() const;

    /// Text checkpoint: header line then one "index v0 v1 ..." line per replicate.
    void save(std::ostream& out) const;
    static EnsembleAccumulator load(std::istream& in);

    friend bool operator==(const EnsembleAccumulator&, const EnsembleAccumulator&) = default;

private:
    void check_compatible(const EnsembleAccumulator& other) const;

    std::int64_t n_;
    std::vector<double> times_;
    std::vector<double> base_points_;
    std::map<std::uint64_t, std::vector<std::int64_t>> rows_;
    std::vector<std::int64_t> sum_;
    std::vector<std::int64_t> cross_;  // row-major dim x dim sums of products
};

/// Empirical-versus-theoretical covariance cell.
struct CovarianceCell {
    double s = 0.0;
    double t = 0.0;
    double empirical = 0.0;
    double theoretical = 0.0;
    double se = 0.0;
    double z = 0.0;
};

std::vector<CovarianceCell> compare_covariance(const EnsembleSummary& summary, std::size_t base, const CovKernel& kernel);
void write_comparison_csv(std::ostream& out, std::span<const CovarianceCell> cells);
/// Number of cells with |z| > threshold.
std::size_t count_exceeding(std::span<const CovarianceCell> cells, double threshold);

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

/// Least squares y = a + b x with the usual slope standard error (0 when two points or an exact fit).
Regression least_squares(std::span<const double> x, std::span<const double> y);
/// Slope of log sd against log n; needs at least 3 distinct n and sd > 0.
Regression scaling_exponent(std::span<const double> ns, std::span<const double> sds);
/// Slope of log mean-abs-error against log n; needs at least 3 n values and positive errors.
Regression hydro_error(std::span<const double> ns, std::span<const double> errors);

struct CorrelationCell {
    std::size_t base_a = 0;
    std::size_t base_b = 0;
    double s = 0.0;
    double t = 0.0;
    double corr = 0.0;
    double se = 0.0;
};

struct IndependenceReport {
    std::vector<CorrelationCell> cells;
    double max_abs_corr = 0.0;
    double max_abs_z = 0.0;  // max |corr| / se over cells with se > 0
};

/// Cross-characteristic correlations Corr(Y(ybar_a, s), Y(ybar_b, t)) with jackknife SEs.
IndependenceReport independence_test(const EnsembleAccumulator& ensemble);

struct SpreadEstimate {
    double mean = 0.0;
    double sd = 0.0;
    double sd_se = 0.0;  // sd / sqrt(2 (R - 1)), the normal-theory standard error
    std::size_t count = 0;
};

SpreadEstimate spread(std::span<const double> values);

/// n^{-1/2} (sigma_{nt}([nx]) - sigma0([n(x - bt)])) per replicate, and its spread.
SpreadEstimate transported_fluctuation_check(std::span<const std::int64_t> height_minus_origin, std::int64_t n);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double p);
/// Bootstrap standard error of the p-quantile.
double bootstrap_quantile_se(std::span<const double> values, double p, std::size_t resamples, RngStream rng);

}  // namespace charflux
