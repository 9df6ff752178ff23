// The beyond-mean-field coupling function A(w, alpha) and its tabulation.
//
// A is a triple integral: outer k in [0, inf), Omega in [-1, 1], inner
// q in [0, 1] restricted by the step function Theta(1 - |q + k|). The
// restriction is handled exactly: for fixed (k, Omega) the kept q-range is
// the part of [0, 1] where q^2 + 2*k*q*Omega + k^2 - 1 > 0, i.e. at most two
// root-bounded segments. On each segment the integrand q^2/(a + b*q) with
//   a = sqrt(k^2 + alpha) + w*k,   b = 2*w*Omega
// has a closed-form antiderivative, so only the (k, Omega) double integral
// is done numerically: composite Gauss-Legendre with the Omega axis split at
// the points where the q-segment structure changes, the k axis split at
// k = 1 and k = 2, the tail mapped to a finite interval by a rational
// substitution scaled with sqrt(alpha), and panel counts doubled until the
// result is stable to the requested tolerance.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bfmix/common.hpp"

namespace bfmix {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1], computed once per order by
// Newton iteration on the Legendre recurrence.
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double xi = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = xi;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2 * j - 1) * xi * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
            const double dx = p1 / dp;
            xi -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = xi;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

// integral of q^2/(a + b*q) over [q1, q2], a + b*q > 0 on the interval.
// Switches to a series in b*q/a when the closed form would cancel.
inline double q_rational_integral(double a, double b, double q1, double q2) {
    const double qm = std::max(std::abs(q1), std::abs(q2));
    if (std::abs(b) * qm < 0.25 * a) {
        // sum_m (-b/a)^m (q2^{m+3} - q1^{m+3}) / ((m+3) a)
        double sum = 0.0;
        double r = -b / a;
        double rm = 1.0;
        double p1 = q1 * q1 * q1, p2 = q2 * q2 * q2;
        for (int m = 0; m < 64; ++m) {
            const double term = rm * (p2 - p1) / ((m + 3) * a);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum) + 1e-300) break;
            rm *= r;
            p1 *= q1;
            p2 *= q2;
        }
        return sum;
    }
    const auto anti = [&](double q) {
        return q * q / (2.0 * b) - a * q / (b * b) + (a * a) / (b * b * b) * std::log(a + b * q);
    };
    return anti(q2) - anti(q1);
}

// Kept q-segments of [0, 1]: where q^2 + 2*k*Omega*q + k^2 - 1 > 0.
struct QSegments {
    std::array<std::pair<double, double>, 2> seg;
    int count = 0;
};

inline QSegments kept_q_segments(double k, double omega) {
    QSegments s;
    const double disc = k * k * omega * omega - k * k + 1.0;
    if (disc <= 0.0) {
        s.seg[0] = {0.0, 1.0};
        s.count = 1;
        return s;
    }
    const double root = std::sqrt(disc);
    const double r1 = -k * omega - root;
    const double r2 = -k * omega + root;
    // kept where q < r1 or q > r2
    const double lo1 = 0.0, hi1 = std::min(1.0, r1);
    if (hi1 > lo1) s.seg[static_cast<std::size_t>(s.count++)] = {lo1, hi1};
    const double lo2 = std::max(0.0, r2), hi2 = 1.0;
    if (hi2 > lo2) s.seg[static_cast<std::size_t>(s.count++)] = {lo2, hi2};
    return s;
}

// Bracket of Eq-of-motion kernel at fixed (k, Omega).
inline double afun_bracket(double w, double alpha, double k, double omega) {
    const double sk = std::sqrt(k * k + alpha);
    const double a = sk + w * k;
    const double b = 2.0 * w * omega;
    const QSegments qs = kept_q_segments(k, omega);
    double iq = 0.0;
    for (int s = 0; s < qs.count; ++s)
        iq += q_rational_integral(a, b, qs.seg[static_cast<std::size_t>(s)].first,
                                  qs.seg[static_cast<std::size_t>(s)].second);
    return 1.0 - 3.0 * k * k * (1.0 + w) / sk * iq;
}

// Omega-integral of the bracket at fixed k, split where the q-segment
// structure changes: Omega = -k/2 (segment endpoint crosses q = 1) and
// Omega = +-sqrt(1 - 1/k^2) (discriminant sign change, k > 1).
inline double omega_integral(double w, double alpha, double k, int panels, int order) {
    std::vector<double> cuts{-1.0, 1.0};
    if (k < 2.0 && -k / 2.0 > -1.0) cuts.push_back(-k / 2.0);
    if (k > 1.0) {
        const double oc = std::sqrt(1.0 - 1.0 / (k * k));
        if (oc < 1.0) {
            cuts.push_back(oc);
            cuts.push_back(-oc);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    const auto& [gx, gw] = gauss_legendre(order);
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double lo = cuts[c], hi = cuts[c + 1];
        if (hi - lo < 1e-15) continue;
        // Omega = m + r*sin(pi*s/2): the vanishing jacobian turns the
        // square-root behavior at disc = 0 endpoints into an analytic one.
        const double m = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
        const double hs = 2.0 / panels;
        for (int p = 0; p < panels; ++p) {
            const double smid = -1.0 + (p + 0.5) * hs;
            double sum = 0.0;
            for (std::size_t i = 0; i < gx.size(); ++i) {
                const double s = smid + 0.5 * hs * gx[i];
                const double om = m + r * std::sin(0.5 * std::numbers::pi * s);
                const double jac =
                    r * 0.5 * std::numbers::pi * std::cos(0.5 * std::numbers::pi * s);
                sum += gw[i] * jac * afun_bracket(w, alpha, k, om);
            }
            total += 0.5 * hs * sum;
        }
    }
    return total;
}

// Full (k, Omega) integral at a given refinement level.
inline double afun_level(double w, double alpha, int level) {
    const int order = 16;
    const int kp = 4 << level;       // k panels per finite segment
    const int op = 2 << level;       // Omega panels per subinterval
    const auto& [gx, gw] = gauss_legendre(order);
    double total = 0.0;
    // finite k segments split where the Omega breakpoint structure changes
    const double kroot2 = std::numbers::sqrt2;
    for (const auto& [klo, khi] :
         {std::pair{0.0, 1.0}, std::pair{1.0, kroot2}, std::pair{kroot2, 2.0}}) {
        const double h = (khi - klo) / kp;
        for (int p = 0; p < kp; ++p) {
            const double mid = klo + (p + 0.5) * h;
            for (std::size_t i = 0; i < gx.size(); ++i) {
                const double k = mid + 0.5 * h * gx[i];
                total += 0.5 * h * gw[i] * omega_integral(w, alpha, k, op, order);
            }
        }
    }
    // tail k in [2, inf): k = 2 + s*t/(1-t), dk = s/(1-t)^2 dt
    const double s = std::max(1.0, std::sqrt(alpha));
    const int tp = 2 * kp;
    const double ht = 1.0 / tp;
    for (int p = 0; p < tp; ++p) {
        const double mid = (p + 0.5) * ht;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double t = mid + 0.5 * ht * gx[i];
            const double om = 1.0 - t;
            const double k = 2.0 + s * t / om;
            const double jac = s / (om * om);
            total += 0.5 * ht * gw[i] * jac * omega_integral(w, alpha, k, op, order);
        }
    }
    return total;
}

}  // namespace detail

// Production quadrature for A(w, alpha). Refines until two successive levels
// agree to rel_tol; throws QuadratureError with diagnostics otherwise.
inline double afun_quadrature(double w, double alpha, double rel_tol = 1e-9,
                              int max_level = 6) {
    if (!(w > 0.0)) throw std::invalid_argument("afun: mass ratio w must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("afun: alpha must be >= 0");
    const double pref = 2.0 * (1.0 + w) / (3.0 * w) *
                        std::pow(6.0 / std::numbers::pi, 2.0 / 3.0);
    double prev = detail::afun_level(w, alpha, 0);
    for (int level = 1; level <= max_level; ++level) {
        const double cur = detail::afun_level(w, alpha, level);
        if (std::abs(cur - prev) <= rel_tol * std::abs(cur) + 1e-14)
            return pref * cur;
        prev = cur;
    }
    std::ostringstream msg;
    msg << "afun_quadrature did not converge: w=" << w << " alpha=" << alpha
        << " rel_tol=" << rel_tol << " last=" << pref * prev;
    throw QuadratureError(msg.str());
}

namespace detail {

// Cubic Hermite interpolant on a uniform abscissa grid with prescribed node
// derivatives. Local (no global solve, no boundary-condition artifacts) and
// exact for the node values and derivatives.
class UniformCubicHermite {
  public:
    UniformCubicHermite() = default;
    UniformCubicHermite(double t0, double h, std::vector<double> y, std::vector<double> d)
        : t0_(t0), h_(h), y_(std::move(y)), d_(std::move(d)) {}

    double operator()(double t) const {
        const auto [i, s] = locate(t);
        const double s2 = s * s, s3 = s2 * s;
        return (2.0 * s3 - 3.0 * s2 + 1.0) * y_[i] + (s3 - 2.0 * s2 + s) * h_ * d_[i] +
               (-2.0 * s3 + 3.0 * s2) * y_[i + 1] + (s3 - s2) * h_ * d_[i + 1];
    }

    double derivative(double t) const {
        const auto [i, s] = locate(t);
        const double s2 = s * s;
        return ((6.0 * s2 - 6.0 * s) * y_[i] + (-6.0 * s2 + 6.0 * s) * y_[i + 1]) / h_ +
               (3.0 * s2 - 4.0 * s + 1.0) * d_[i] + (3.0 * s2 - 2.0 * s) * d_[i + 1];
    }

  private:
    std::pair<std::size_t, double> locate(double t) const {
        const std::size_t n = y_.size();
        const double u = (t - t0_) / h_;
        std::size_t i = u <= 0.0 ? 0 : static_cast<std::size_t>(u);
        if (i + 1 >= n) i = n - 2;
        return {i, u - static_cast<double>(i)};
    }

    double t0_ = 0.0, h_ = 1.0;
    std::vector<double> y_, d_;
};

}  // namespace detail

// Precomputed A(w, alpha) and dA/dalpha on a log-spaced alpha grid with
// cubic-spline interpolation in ln(alpha). Immutable after construction and
// shareable across threads. Queries outside the tabulated range are clamped
// (a single warning is printed).
class AFunctionTable {
  public:
    double w() const { return w_; }
    double alpha_min() const { return alpha_min_; }
    double alpha_max() const { return alpha_max_; }
    int nodes() const { return nodes_; }
    const std::vector<double>& alpha_grid() const { return alpha_grid_; }
    const std::vector<double>& a_values() const { return a_values_; }
    const std::vector<double>& da_values() const { return da_values_; }

    double value(double alpha) const { return a_interp_(clamped_log(alpha)); }

    // dA/dalpha = (dA/d ln(alpha)) / alpha from the same interpolant, so the
    // value and its derivative stay mutually consistent.
    double derivative(double alpha) const {
        const double t = clamped_log(alpha);
        return a_interp_.derivative(t) / std::exp(t);
    }

    static AFunctionTable build(double w, double alpha_min = 1e-4,
                                double alpha_max = 1e6, int nodes = 1024,
                                double quad_rel_tol = 1e-9) {
        if (nodes < 64) throw std::invalid_argument("A-table needs at least 64 nodes");
        if (!(alpha_min > 0.0) || !(alpha_max > alpha_min))
            throw std::invalid_argument("bad A-table alpha range");
        AFunctionTable tab;
        tab.w_ = w;
        tab.alpha_min_ = alpha_min;
        tab.alpha_max_ = alpha_max;
        tab.nodes_ = nodes;
        tab.alpha_grid_.resize(static_cast<std::size_t>(nodes));
        tab.a_values_.resize(static_cast<std::size_t>(nodes));
        tab.da_values_.resize(static_cast<std::size_t>(nodes));
        const double t0 = std::log(alpha_min);
        const double h = (std::log(alpha_max) - t0) / (nodes - 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int i = 0; i < nodes; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const double alpha = std::exp(t0 + i * h);
            tab.alpha_grid_[ii] = alpha;
            tab.a_values_[ii] = afun_quadrature(w, alpha, quad_rel_tol);
            // centered finite difference in alpha on a refined quadrature
            const double step = 1e-3 * alpha;
            const double ap = afun_quadrature(w, alpha + step, quad_rel_tol);
            const double am = afun_quadrature(w, alpha - step, quad_rel_tol);
            tab.da_values_[ii] = (ap - am) / (2.0 * step);
        }
        tab.finish_splines();
        return tab;
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open for writing: " + path);
        os.write("BFX1", 4);
        const std::uint32_t dims[3] = {static_cast<std::uint32_t>(nodes_), 1, 1};
        os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        const double zero = 0.0;
        os.write(reinterpret_cast<const char*>(&zero), sizeof(double));
        const double key[3] = {w_, alpha_min_, alpha_max_};
        os.write(reinterpret_cast<const char*>(key), sizeof(key));
        os.write(reinterpret_cast<const char*>(a_values_.data()),
                 static_cast<std::streamsize>(a_values_.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(da_values_.data()),
                 static_cast<std::streamsize>(da_values_.size() * sizeof(double)));
        if (!os) throw std::runtime_error("write failed: " + path);
    }

    // Returns false (without modifying *this) if the file is absent or keyed
    // by different (w, range, nodes).
    static bool try_load(const std::string& path, double w, double alpha_min,
                         double alpha_max, int nodes, AFunctionTable* out) {
        std::ifstream is(path, std::ios::binary);
        if (!is) return false;
        char magic[4];
        is.read(magic, 4);
        if (!is || std::memcmp(magic, "BFX1", 4) != 0) return false;
        std::uint32_t dims[3];
        double dx0, key[3];
        is.read(reinterpret_cast<char*>(dims), sizeof(dims));
        is.read(reinterpret_cast<char*>(&dx0), sizeof(double));
        is.read(reinterpret_cast<char*>(key), sizeof(key));
        if (!is || dims[0] != static_cast<std::uint32_t>(nodes)) return false;
        if (key[0] != w || key[1] != alpha_min || key[2] != alpha_max) return false;
        AFunctionTable tab;
        tab.w_ = w;
        tab.alpha_min_ = alpha_min;
        tab.alpha_max_ = alpha_max;
        tab.nodes_ = nodes;
        tab.a_values_.resize(static_cast<std::size_t>(nodes));
        tab.da_values_.resize(static_cast<std::size_t>(nodes));
        is.read(reinterpret_cast<char*>(tab.a_values_.data()),
                static_cast<std::streamsize>(tab.a_values_.size() * sizeof(double)));
        is.read(reinterpret_cast<char*>(tab.da_values_.data()),
                static_cast<std::streamsize>(tab.da_values_.size() * sizeof(double)));
        if (!is) return false;
        const double t0 = std::log(alpha_min);
        const double h = (std::log(alpha_max) - t0) / (nodes - 1);
        tab.alpha_grid_.resize(static_cast<std::size_t>(nodes));
        for (int i = 0; i < nodes; ++i)
            tab.alpha_grid_[static_cast<std::size_t>(i)] = std::exp(t0 + i * h);
        tab.finish_splines();
        *out = std::move(tab);
        return true;
    }

    // Build-or-load with an on-disk cache keyed by (w, range, nodes).
    static AFunctionTable cached(const std::string& path, double w,
                                 double alpha_min = 1e-4, double alpha_max = 1e6,
                                 int nodes = 1024) {
        AFunctionTable tab;
        if (try_load(path, w, alpha_min, alpha_max, nodes, &tab)) return tab;
        tab = build(w, alpha_min, alpha_max, nodes);
        tab.save(path);
        return tab;
    }

  private:
    double clamped_log(double alpha) const {
        if (alpha < alpha_min_ || alpha > alpha_max_) {
            if (!clamp_warned_) {
                clamp_warned_ = true;
                std::fprintf(stderr,
                             "bfmix: A-table query alpha=%g outside [%g, %g], clamping\n",
                             alpha, alpha_min_, alpha_max_);
            }
            alpha = std::min(std::max(alpha, alpha_min_), alpha_max_);
        }
        return std::log(alpha);
    }

    void finish_splines() {
        const double t0 = std::log(alpha_min_);
        const double h = (std::log(alpha_max_) - t0) / (nodes_ - 1);
        std::vector<double> g(da_values_.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = alpha_grid_[i] * da_values_[i];
        a_interp_ = detail::UniformCubicHermite(t0, h, a_values_, std::move(g));
    }

    double w_ = 1.0;
    double alpha_min_ = 0.0, alpha_max_ = 0.0;
    int nodes_ = 0;
    std::vector<double> alpha_grid_, a_values_, da_values_;
    detail::UniformCubicHermite a_interp_;
    mutable bool clamp_warned_ = false;
};

}  // namespace bfmix
