#include "charflux/hammersley.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "charflux/stats.hpp"

namespace charflux {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kScanSteps = 10000;
constexpr double kGoldenTolerance = 1e-12;
constexpr double kValueTolerance = 1e-10;
constexpr double kMergeTolerance = 1e-6;
constexpr int kMaxWidenings = 6;

bool space_order(const PlanePoint& a, const PlanePoint& b) {
    return a.space < b.space || (a.space == b.space && a.time > b.time);
}

double golden_section(const std::function<double(double)>& f, double a, double b) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > kGoldenTolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// Parabolic vertex steps at shrinking spacing; kept only inside [a, b] with positive curvature and no loss in value.
double parabolic_polish(const std::function<double(double)>& f, double y, double a, double b) {
    for (double h : {1e-3, 1e-5}) {
        if (y - h < a || y + h > b) break;
        const double fm = f(y - h), f0 = f(y), fp = f(y + h);
        const double curvature = fp - 2.0 * f0 + fm;
        if (!(curvature > 0.0)) break;
        const double next = y - 0.5 * h * (fp - fm) / curvature;
        if (!(std::fabs(next - y) <= h)) break;
        const double fn = f(next);
        if (fn > f0 + 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(f0)) break;
        y = next;
    }
    return y;
}

}  // namespace

PoissonField::PoissonField(RngStream rng, double cell_width, double cell_height) : rng_(rng), cell_width_(cell_width), cell_height_(cell_height) {
    if (!(cell_width > 0.0 && cell_height > 0.0)) throw std::invalid_argument("poisson field: cell sizes must be positive");
}

std::int64_t PoissonField::column_of(double space) const { return static_cast<std::int64_t>(std::floor(space / cell_width_)); }

std::vector<PlanePoint> PoissonField::cell(std::int64_t cx, std::int64_t ct) const {
    std::vector<PlanePoint> pts;
    if (ct < 0) return pts;
    RngStream rng = rng_.child(static_cast<std::uint64_t>(cx)).child(static_cast<std::uint64_t>(ct));
    const std::int64_t count = poisson(rng, cell_width_ * cell_height_);
    pts.reserve(static_cast<std::size_t>(count));
    const double x0 = static_cast<double>(cx) * cell_width_;
    const double t0 = static_cast<double>(ct) * cell_height_;
    for (std::int64_t i = 0; i < count; ++i) {
        const double s = x0 + cell_width_ * rng.uniform();
        const double t = t0 + cell_height_ * rng.uniform();
        pts.push_back({s, t});
    }
    return pts;
}

std::vector<PlanePoint> PoissonField::column(std::int64_t cx, double time_hi) const {
    std::vector<PlanePoint> pts;
    if (!(time_hi > 0.0)) return pts;
    const auto rows = static_cast<std::int64_t>(std::ceil(time_hi / cell_height_));
    for (std::int64_t ct = 0; ct < rows; ++ct)
        for (const auto& p : cell(cx, ct))
            if (p.time > 0.0 && p.time <= time_hi) pts.push_back(p);
    std::sort(pts.begin(), pts.end(), space_order);
    return pts;
}

std::vector<PlanePoint> PoissonField::points_in(double space_lo, double space_hi, double time_lo, double time_hi) const {
    std::vector<PlanePoint> pts;
    if (!(space_hi > space_lo) || !(time_hi > time_lo) || time_hi <= 0.0) return pts;
    const std::int64_t ct_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(time_lo / cell_height_)));
    const auto ct_hi = static_cast<std::int64_t>(std::floor(time_hi / cell_height_));
    for (std::int64_t cx = column_of(space_lo); cx <= column_of(space_hi); ++cx)
        for (std::int64_t ct = ct_lo; ct <= ct_hi; ++ct)
            for (const auto& p : cell(cx, ct))
                if (p.space > space_lo && p.space <= space_hi && p.time > time_lo && p.time <= time_hi) pts.push_back(p);
    return pts;
}

std::int64_t lis_count(std::span<const PlanePoint> points) {
    std::vector<PlanePoint> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(), space_order);
    std::vector<double> piles;
    for (const auto& p : sorted) {
        const auto it = std::lower_bound(piles.begin(), piles.end(), p.time);
        if (it == piles.end()) {
            piles.push_back(p.time);
        } else {
            *it = p.time;
        }
    }
    return static_cast<std::int64_t>(piles.size());
}

GammaSweep::GammaSweep(const PoissonField& field, double base, double t)
    : field_(&field), base_(base), t_(t), next_column_(field.column_of(base)), frontier_(base) {
    if (!std::isfinite(base)) throw std::invalid_argument("gamma: base must be finite");
    if (!(t >= 0.0)) throw std::invalid_argument("gamma: t must be >= 0");
}

void GammaSweep::advance_column() {
    for (const auto& p : field_->column(next_column_, t_)) {
        if (p.space <= base_) continue;
        const auto it = std::lower_bound(piles_.begin(), piles_.end(), p.time);
        if (it == piles_.end()) {
            piles_.push_back(p.time);
            attained_.push_back(p.space);
        } else {
            *it = p.time;
        }
    }
    ++next_column_;
    frontier_ = static_cast<double>(next_column_) * field_->cell_width();
}

double GammaSweep::attain(std::int64_t m, double space_limit) {
    if (m < 0) throw std::invalid_argument("gamma: m must be >= 0");
    if (m == 0) return base_;
    while (reached() < m) {
        if (t_ <= 0.0 || frontier_ > space_limit) return kInf;
        advance_column();
    }
    return attained_[static_cast<std::size_t>(m - 1)];
}

double gamma(const PoissonField& field, double base, double t, std::int64_t m, double max_height) {
    if (m < 0) throw std::invalid_argument("gamma: m must be >= 0");
    if (m == 0) return 0.0;
    GammaSweep sweep(field, base, t);
    const double v = sweep.attain(m, base + max_height);
    if (!(v <= base + max_height)) throw FieldExtentError("gamma: rectangle of the requested height holds too few increasing points; sample a taller rectangle");
    return v - base;
}

double HammersleyState::at(std::int64_t label) const {
    if (label < first_label || label > last_label()) throw std::out_of_range("hammersley state: label outside window");
    return z[static_cast<std::size_t>(label - first_label)];
}

std::vector<double> HammersleyState::sticks() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < z.size(); ++i) out.push_back(z[i] - z[i - 1]);
    return out;
}

HammersleyState wedge_initial_state(std::int64_t first_label, std::int64_t last_label) {
    if (first_label > 0 || last_label < first_label) throw std::invalid_argument("wedge state: need first_label <= 0 and last_label >= first_label");
    HammersleyState s;
    s.first_label = first_label;
    for (std::int64_t i = first_label; i <= last_label; ++i) s.z.push_back(i <= 0 ? 0.0 : kInf);
    return s;
}

HammersleyState evolve(const HammersleyState& z0, const PoissonField& field, double t, std::int64_t out_lo, std::int64_t out_hi) {
    if (!(t >= 0.0)) throw std::invalid_argument("evolve: t must be >= 0");
    if (z0.z.empty()) throw std::invalid_argument("evolve: empty initial state");
    if (out_lo > out_hi || out_lo < z0.first_label || out_hi > z0.last_label()) throw std::invalid_argument("evolve: output labels outside the label window");
    for (std::size_t i = 0; i < z0.z.size(); ++i) {
        if (std::isnan(z0.z[i]) || z0.z[i] == -kInf) throw std::invalid_argument("evolve: z0 must be finite or +inf");
        if (i > 0 && !(z0.z[i - 1] <= z0.z[i])) throw std::invalid_argument("evolve: z0 must be nondecreasing in the label");
    }

    const auto width = static_cast<std::size_t>(out_hi - out_lo + 1);
    HammersleyState out;
    out.first_label = out_lo;
    out.z.assign(width, kInf);
    out.minimizer.assign(width, 0);
    for (std::int64_t k = out_lo; k <= out_hi; ++k) {
        out.z[static_cast<std::size_t>(k - out_lo)] = z0.at(k);
        out.minimizer[static_cast<std::size_t>(k - out_lo)] = k;
    }

    // Labels from high to low so a tie goes to the smaller label.
    for (std::int64_t i = out_hi - 1; i >= z0.first_label; --i) {
        const double zi = z0.at(i);
        if (!std::isfinite(zi) || z0.at(i + 1) == zi) continue;
        GammaSweep sweep(field, zi, t);
        for (std::int64_t k = std::max(out_lo, i + 1); k <= out_hi; ++k) {
            const auto slot = static_cast<std::size_t>(k - out_lo);
            const double v = sweep.attain(k - i, out.z[slot]);
            if (v <= out.z[slot]) {
                out.z[slot] = v;
                out.minimizer[slot] = i;
            }
        }
    }

    for (std::size_t slot = 0; slot < width; ++slot) {
        if (!std::isfinite(out.z[slot])) throw LabelWindowError("evolve: no finite candidate in the label window");
        if (out.minimizer[slot] == z0.first_label) throw LabelWindowError("evolve: infimum attained at the lowest label; widen the label window");
    }
    return out;
}

double hopf_lax_phi(const Profile& profile, double x, double t, double y) {
    if (y > x) return kInf;
    return profile.u0(y) + (x - y) * (x - y) / (4.0 * t);
}

std::pair<double, double> hopf_lax_search_range(const Profile& profile, double x, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("hopf_lax: t must be > 0");
    const double top = std::min(x, profile.finite_upper_limit());
    return {top - 4.0 * t * profile.rho_max() - 1.0, top};
}

HopfLaxSolution hopf_lax(const Profile& profile, double x, double t) {
    const auto [lo, hi] = hopf_lax_search_range(profile, x, t);
    HopfLaxSolution sol;
    sol.x = x;
    sol.t = t;
    const auto phi = [&](double y) {
        ++sol.evaluations;
        return hopf_lax_phi(profile, x, t, y);
    };

    const double h = (hi - lo) / static_cast<double>(kScanSteps);
    std::vector<double> ys(kScanSteps + 1);
    std::vector<double> vals(kScanSteps + 1);
    for (std::size_t i = 0; i <= kScanSteps; ++i) {
        ys[i] = i == kScanSteps ? hi : lo + h * static_cast<double>(i);
        vals[i] = phi(ys[i]);
    }

    std::vector<std::pair<double, double>> candidates;  // (y, Phi)
    for (std::size_t i = 0; i <= kScanSteps; ++i) {
        const bool left_ok = i == 0 || vals[i] <= vals[i - 1];
        const bool right_ok = i == kScanSteps || vals[i] <= vals[i + 1];
        if (!left_ok || !right_ok) continue;
        const double a = ys[i == 0 ? 0 : i - 1];
        const double b = ys[i == kScanSteps ? kScanSteps : i + 1];
        const double g = golden_section(phi, a, b);
        const double y = parabolic_polish(phi, g, lo, hi);
        double best_y = y;
        double best_v = phi(y);
        if (vals[i] < best_v) {
            best_y = ys[i];
            best_v = vals[i];
        }
        candidates.emplace_back(best_y, best_v);
    }
    if (candidates.empty()) throw std::logic_error("hopf_lax: no basin found");

    double u = kInf;
    for (const auto& c : candidates) u = std::min(u, c.second);
    if (!std::isfinite(u)) throw std::logic_error("hopf_lax: Phi has no finite minimum");
    sol.u = u;

    std::sort(candidates.begin(), candidates.end());
    for (const auto& [y, v] : candidates) {
        if (v > u + kValueTolerance) continue;
        if (!sol.minimizers.empty() && y - sol.minimizers.back() <= kMergeTolerance) continue;
        sol.minimizers.push_back(y);
    }
    sol.shock = sol.minimizers.size() >= 2;
    return sol;
}

void write_hopf_lax_csv(std::ostream& out, std::span<const HopfLaxSolution> rows) {
    out << "x,u,shock,minimizers\n";
    for (const auto& r : rows) {
        out << r.x << ',' << r.u << ',' << (r.shock ? 1 : 0) << ',';
        for (std::size_t i = 0; i < r.minimizers.size(); ++i) out << (i ? ";" : "") << r.minimizers[i];
        out << '\n';
    }
}

QuadraticGrowth quadratic_growth_constant(const std::function<double(double)>& phi, std::span<const double> minimizers, double delta, double upper,
                                  std::size_t grid_points) {
    if (!(delta > 0.0) || grid_points == 0) throw std::invalid_argument("quadratic growth: need delta > 0 and a nonempty grid");
    QuadraticGrowth e{kInf, false};
    for (double ybar : minimizers) {
        const double base = phi(ybar);
        for (std::size_t j = 1; j <= grid_points; ++j) {
            const double d = delta * static_cast<double>(j) / static_cast<double>(grid_points);
            for (double y : {ybar - d, ybar + d}) {
                if (y > upper) continue;
                const double v = phi(y);
                if (!std::isfinite(v)) continue;
                e.c1 = std::min(e.c1, (v - base) / ((y - ybar) * (y - ybar)));
            }
        }
    }
    e.ok = std::isfinite(e.c1) && e.c1 > 0.0;
    return e;
}

QuadraticGrowth check_quadratic_growth(const Profile& profile, const HopfLaxSolution& solution, double delta, std::size_t grid_points) {
    const auto phi = [&](double y) { return hopf_lax_phi(profile, solution.x, solution.t, y); };
    return quadratic_growth_constant(phi, solution.minimizers, delta, std::min(solution.x, profile.finite_upper_limit()), grid_points);
}

SecondOrderReplicate second_order_replicate(const SecondOrderSetup& setup, const HopfLaxSolution& solution, std::int64_t n, const RngStream& rng) {
    if (n < 1) throw std::invalid_argument("second order: n must be >= 1");
    if (!(setup.t > 0.0)) throw std::invalid_argument("second order: t must be > 0");
    const auto dn = static_cast<double>(n);
    const std::int64_t k = lattice_floor(dn * setup.x);
    const PoissonField field(rng.child(0));
    const double tn = dn * setup.t;

    SecondOrderReplicate rep;
    if (setup.profile.shape() == ProfileShape::wedge) {
        if (k < 1) throw std::invalid_argument("second order: wedge profile needs [nx] >= 1");
        const HammersleyState z = evolve(wedge_initial_state(-1, k), field, tn, k, k);
        rep.y = z.z[0] - dn * solution.u;
        rep.minimizer = z.minimizer[0];
    } else {
        const double ymin = *std::min_element(solution.minimizers.begin(), solution.minimizers.end());
        std::int64_t margin = setup.label_margin > 0 ? setup.label_margin : std::max<std::int64_t>(16, static_cast<std::int64_t>(std::ceil(4.0 * std::cbrt(dn * dn))));
        for (int attempt = 0;; ++attempt) {
            const std::int64_t lo = lattice_floor(dn * ymin) - margin;
            const SiteRange window{std::min<std::int64_t>(0, lo), std::max<std::int64_t>(0, k)};
            const InitialCondition ic = setup.ic == IcKind::random ? gen_random_ic(setup.profile, n, window, setup.law, rng.child(1))
                                                                   : gen_deterministic_ic(setup.profile, n, window);
            HammersleyState z0;
            z0.first_label = lo;
            for (std::int64_t i = lo; i <= k; ++i) z0.z.push_back(static_cast<double>(ic.sigma0(i)));
            try {
                const HammersleyState z = evolve(z0, field, tn, k, k);
                double inf_term = kInf;
                for (double y : solution.minimizers)
                    inf_term = std::min(inf_term, static_cast<double>(ic.sigma0(lattice_floor(dn * y))) - dn * setup.profile.u0(y));
                rep.y = z.z[0] - dn * solution.u - inf_term;
                rep.minimizer = z.minimizer[0];
                break;
            } catch (const LabelWindowError&) {
                if (attempt >= kMaxWidenings) throw;
                margin *= 2;
            }
        }
    }
    rep.normalized = rep.y / (std::cbrt(dn) * std::log(dn));
    return rep;
}

std::vector<SecondOrderResult> second_order_experiment(const SecondOrderSetup& setup, std::span<const std::int64_t> ns, std::size_t replicates,
                                                       const RngStream& rng) {
    const HopfLaxSolution solution = hopf_lax(setup.profile, setup.x, setup.t);
    std::vector<SecondOrderResult> results;
    for (std::int64_t n : ns) {
        SecondOrderResult r;
        r.n = n;
        r.normalizer = std::cbrt(static_cast<double>(n)) * std::log(static_cast<double>(n));
        std::vector<double> scaled;
        const RngStream n_rng = rng.child(static_cast<std::uint64_t>(n));
        for (std::size_t j = 0; j < replicates; ++j) {
            const SecondOrderReplicate rep = second_order_replicate(setup, solution, n, n_rng.child(j));
            r.values.push_back(rep.y);
            scaled.push_back(std::fabs(rep.normalized));
        }
        if (!scaled.empty()) {
            r.sd = spread(r.values).sd;
            r.q50 = quantile(scaled, 0.5);
            r.q90 = quantile(scaled, 0.9);
            r.q99 = quantile(scaled, 0.99);
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace charflux
