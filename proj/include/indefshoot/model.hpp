#pragma once

// Weight a(t), nonlinearity g(s), parameter pairs and the closed-form
// threshold quantities built from A^{+/-} and g_m.

#include "indefshoot/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace indefshoot {

namespace detail {

inline double integrate_gk(const std::function<double(double)>& f, double a, double b,
                           double rel_tol = 1e-10) {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 20, rel_tol);
}

// Exact integral of the positive part of the linear interpolant between
// (u, fu) and (v, fv).
inline double linear_positive_part(double u, double fu, double v, double fv) {
    const double len = v - u;
    if (len <= 0.0) return 0.0;
    if (fu >= 0.0 && fv >= 0.0) return 0.5 * (fu + fv) * len;
    if (fu <= 0.0 && fv <= 0.0) return 0.0;
    const double r = fu / (fu - fv); // zero crossing fraction
    return fu > 0.0 ? 0.5 * fu * r * len : 0.5 * fv * (1.0 - r) * len;
}

} // namespace detail

/// lambda multiplies a^+, mu multiplies a^-.
struct ParameterPair {
    double lambda = 0.0;
    double mu = 0.0;

    void validate(bool allow_zero_mu = false) const {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ParameterError("lambda must be positive and finite");
        if (!std::isfinite(mu) || mu < 0.0 || (!allow_zero_mu && mu == 0.0))
            throw ParameterError("mu must be positive and finite");
    }
};

enum class HumpSign { positive, negative };

struct WeightSegment {
    double t0 = 0.0;
    double t1 = 0.0;
    HumpSign sign = HumpSign::positive;
};

/// Sign-structured weight on [0,T]: positive on [0,n_0], negative on
/// [n_0,n_1], positive on [n_1,n_2], ... and positive on the last segment.
/// Immutable after construction.
class WeightSpec {
public:
    using Fn = std::function<double(double)>;

    /// a(t) = sin(pi t). Nodes default to the integers inside ]0,T[.
    static WeightSpec sin_pi(double T, std::vector<double> nodes = {}) {
        if (nodes.empty())
            for (int k = 1; k < T; ++k) nodes.push_back(static_cast<double>(k));
        WeightSpec w(T, std::move(nodes), Kind::sin_pi);
        w.name_ = "sin_pi";
        w.finish();
        return w;
    }

    /// One closed-form function of the global time t per segment.
    static WeightSpec piecewise(double T, std::vector<double> nodes, std::vector<Fn> pieces) {
        if (pieces.size() != nodes.size() + 1)
            throw AdmissibilityError("piecewise weight needs exactly one segment function per interval ("
                                     + std::to_string(nodes.size() + 1) + " expected, got "
                                     + std::to_string(pieces.size()) + ")");
        WeightSpec w(T, std::move(nodes), Kind::piecewise);
        w.pieces_ = std::move(pieces);
        w.name_ = "piecewise";
        w.finish();
        return w;
    }

    /// Sampled table with linear interpolation. Nodes default to the sign
    /// changes of the interpolant.
    static WeightSpec table(double T, std::vector<double> ts, std::vector<double> as,
                            std::vector<double> nodes = {}) {
        if (ts.size() != as.size() || ts.size() < 2)
            throw AdmissibilityError("weight table needs matching t and a arrays with at least 2 samples");
        for (std::size_t i = 1; i < ts.size(); ++i)
            if (!(ts[i] > ts[i - 1]))
                throw AdmissibilityError("weight table times must be strictly increasing");
        if (std::abs(ts.front()) > 1e-12 || std::abs(ts.back() - T) > 1e-12 * std::max(1.0, T))
            throw AdmissibilityError("weight table must span exactly [0,T]");
        if (nodes.empty()) nodes = detect_sign_changes(ts, as);
        WeightSpec w(T, std::move(nodes), Kind::table);
        w.tab_t_ = std::move(ts);
        w.tab_a_ = std::move(as);
        w.name_ = "table";
        w.finish();
        return w;
    }

    double T() const noexcept { return T_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<WeightSegment>& segments() const noexcept { return segments_; }
    const std::string& name() const noexcept { return name_; }

    /// Number of positivity intervals m.
    std::size_t humps() const noexcept { return nodes_.size() / 2 + 1; }

    double sigma() const {
        require_indefinite();
        return nodes_[0];
    }
    double tau() const {
        require_indefinite();
        return nodes_[1];
    }
    /// Right end of the first positive hump (T when there is a single hump).
    double first_hump_end() const noexcept { return nodes_.empty() ? T_ : nodes_.front(); }
    /// Left end of the last positive hump (0 when there is a single hump).
    double last_hump_start() const noexcept { return nodes_.empty() ? 0.0 : nodes_.back(); }

    /// Negativity intervals [n_{2i}, n_{2i+1}].
    std::vector<std::pair<double, double>> negativity_intervals() const {
        std::vector<std::pair<double, double>> out;
        for (std::size_t i = 0; i + 1 < nodes_.size(); i += 2) out.emplace_back(nodes_[i], nodes_[i + 1]);
        return out;
    }

    void require_indefinite() const {
        if (humps() < 2)
            throw AdmissibilityError("weight has no sign change: a negativity interval is required");
    }

    std::size_t segment_index(double t) const noexcept {
        return static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), t) - nodes_.begin());
    }

    /// Raw a(t); t is clamped to [0,T] only by the callers that check it.
    double operator()(double t) const { return eval_in_segment(segment_index(t), t); }

    /// a(t) evaluated with the closed form of segment k (used by the
    /// integrator, which never steps across a node).
    double eval_in_segment(std::size_t k, double t) const {
        switch (kind_) {
        case Kind::sin_pi: return std::sin(std::numbers::pi * t);
        case Kind::piecewise: return pieces_[std::min(k, pieces_.size() - 1)](t);
        case Kind::table: return interpolate(t);
        }
        return 0.0;
    }

    double plus(double t) const { return std::max((*this)(t), 0.0); }
    double minus(double t) const { return std::max(-(*this)(t), 0.0); }

    /// A^+(t1,t2)
    double integral_plus(double t1, double t2) const { return integral_part(t1, t2, true); }
    /// A^-(t1,t2)
    double integral_minus(double t1, double t2) const { return integral_part(t1, t2, false); }

    /// a(t) == a(T - t) on a sampled grid.
    bool is_even(double tol = 1e-9) const {
        const int n = 2001;
        double scale = 0.0;
        for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs((*this)(T_ * i / (n - 1))));
        for (int i = 0; i < n; ++i) {
            const double t = T_ * i / (n - 1);
            if (std::abs((*this)(t) - (*this)(T_ - t)) > tol * std::max(1.0, scale)) return false;
        }
        return true;
    }

    /// Checks the sign pattern, node order and non-degeneracy of each segment.
    void validate() const {
        if (!(T_ > 0.0) || !std::isfinite(T_)) throw AdmissibilityError("T must be positive and finite");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!(nodes_[i] > 0.0 && nodes_[i] < T_))
                throw AdmissibilityError("weight nodes must lie in ]0,T[");
            if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
                throw AdmissibilityError("weight nodes must be strictly increasing");
        }
        if (nodes_.size() % 2 != 0)
            throw AdmissibilityError("weight must start and end with a positivity interval (even number of nodes)");
        constexpr int samples = 1000;
        for (std::size_t k = 0; k < segments_.size(); ++k) {
            const auto& s = segments_[k];
            const double sgn = s.sign == HumpSign::positive ? 1.0 : -1.0;
            double scale = 0.0;
            for (int i = 0; i <= samples; ++i) {
                const double t = s.t0 + (s.t1 - s.t0) * i / samples;
                scale = std::max(scale, std::abs(eval_in_segment(k, t)));
            }
            for (int i = 0; i <= samples; ++i) {
                const double t = s.t0 + (s.t1 - s.t0) * i / samples;
                if (sgn * eval_in_segment(k, t) < -1e-12 * std::max(1.0, scale)) {
                    std::ostringstream msg;
                    msg << "weight has the wrong sign at t=" << t << " (segment [" << s.t0 << "," << s.t1
                        << "] must be " << (sgn > 0 ? "nonnegative" : "nonpositive") << ")";
                    throw AdmissibilityError(msg.str());
                }
            }
            const double mass = s.sign == HumpSign::positive ? integral_plus(s.t0, s.t1)
                                                             : integral_minus(s.t0, s.t1);
            if (!(mass > 0.0)) {
                std::ostringstream msg;
                msg << "weight vanishes almost everywhere on segment [" << s.t0 << "," << s.t1 << "]";
                throw AdmissibilityError(msg.str());
            }
        }
    }

private:
    enum class Kind { sin_pi, piecewise, table };

    WeightSpec(double T, std::vector<double> nodes, Kind kind) : T_(T), nodes_(std::move(nodes)), kind_(kind) {}

    void finish() {
        segments_.clear();
        double lo = 0.0;
        for (std::size_t i = 0; i <= nodes_.size(); ++i) {
            const double hi = i < nodes_.size() ? nodes_[i] : T_;
            segments_.push_back({lo, hi, i % 2 == 0 ? HumpSign::positive : HumpSign::negative});
            lo = hi;
        }
        validate();
    }

    static std::vector<double> detect_sign_changes(const std::vector<double>& ts, const std::vector<double>& as) {
        std::vector<double> nodes;
        int current = 0; // sign of the current segment (0 = not yet known)
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const int s = as[i] > 0.0 ? 1 : (as[i] < 0.0 ? -1 : 0);
            if (s == 0) continue;
            if (current != 0 && s != current) {
                // last sample with the old sign and first with the new one
                std::size_t j = i;
                while (j > 0 && as[j - 1] == 0.0) --j;
                const double ta = ts[j - 1], fa = as[j - 1];
                if (j == i) {
                    const double tb = ts[i], fb = as[i];
                    nodes.push_back(ta + (tb - ta) * fa / (fa - fb));
                } else {
                    nodes.push_back(0.5 * (ts[j] + ts[i - 1]));
                }
            }
            current = s;
        }
        return nodes;
    }

    double interpolate(double t) const {
        if (t <= tab_t_.front()) return tab_a_.front();
        if (t >= tab_t_.back()) return tab_a_.back();
        const auto it = std::upper_bound(tab_t_.begin(), tab_t_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - tab_t_.begin());
        const double u = tab_t_[i - 1], v = tab_t_[i];
        return tab_a_[i - 1] + (tab_a_[i] - tab_a_[i - 1]) * (t - u) / (v - u);
    }

    double table_part(double t1, double t2, double sgn) const {
        double acc = 0.0;
        double u = t1, fu = sgn * interpolate(t1);
        auto it = std::upper_bound(tab_t_.begin(), tab_t_.end(), t1);
        for (; it != tab_t_.end() && *it < t2; ++it) {
            const double v = *it, fv = sgn * interpolate(v);
            acc += detail::linear_positive_part(u, fu, v, fv);
            u = v;
            fu = fv;
        }
        acc += detail::linear_positive_part(u, fu, t2, sgn * interpolate(t2));
        return acc;
    }

    double integral_part(double t1, double t2, bool positive) const {
        if (t1 > t2) throw DomainError("integral bounds must satisfy t1 <= t2");
        if (t1 < 0.0 || t2 > T_ * (1 + 1e-14)) throw DomainError("integral bounds must lie in [0,T]");
        if (t1 == t2) return 0.0;
        if (kind_ == Kind::table) return table_part(t1, t2, positive ? 1.0 : -1.0);
        double acc = 0.0;
        for (std::size_t k = 0; k < segments_.size(); ++k) {
            const auto& s = segments_[k];
            if ((s.sign == HumpSign::positive) != positive) continue;
            const double lo = std::max(t1, s.t0), hi = std::min(t2, s.t1);
            if (hi <= lo) continue;
            const double sgn = positive ? 1.0 : -1.0;
            acc += detail::integrate_gk([&](double t) { return std::max(sgn * eval_in_segment(k, t), 0.0); },
                                        lo, hi);
        }
        return acc;
    }

    double T_ = 0.0;
    std::vector<double> nodes_;
    Kind kind_;
    std::vector<WeightSegment> segments_;
    std::vector<Fn> pieces_;
    std::vector<double> tab_t_, tab_a_;
    std::string name_;
};

/// g on [0,1], extended by zero outside. Immutable after construction.
class Nonlinearity {
public:
    using Fn = std::function<double(double)>;

    /// g(s) = s^2 (1 - s)
    static Nonlinearity s2_1ms() {
        Nonlinearity g(Kind::cubic, [](double s) { return s * s * (1.0 - s); }, "s2_1ms");
        g.finish();
        return g;
    }

    static Nonlinearity from_function(Fn f, std::string name = "custom") {
        Nonlinearity g(Kind::function, std::move(f), std::move(name));
        g.finish();
        return g;
    }

    /// Linear interpolation of samples covering [0,1].
    static Nonlinearity table(std::vector<double> s, std::vector<double> v) {
        if (s.size() != v.size() || s.size() < 3)
            throw AdmissibilityError("g table needs matching s and g arrays with at least 3 samples");
        for (std::size_t i = 1; i < s.size(); ++i)
            if (!(s[i] > s[i - 1])) throw AdmissibilityError("g table abscissae must be strictly increasing");
        if (std::abs(s.front()) > 1e-12 || std::abs(s.back() - 1.0) > 1e-12)
            throw AdmissibilityError("g table must span exactly [0,1]");
        auto fn = [s, v](double x) {
            if (x <= s.front()) return v.front();
            if (x >= s.back()) return v.back();
            const auto it = std::upper_bound(s.begin(), s.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - s.begin());
            return v[i - 1] + (v[i] - v[i - 1]) * (x - s[i - 1]) / (s[i] - s[i - 1]);
        };
        Nonlinearity g(Kind::function, std::move(fn), "table");
        g.finish();
        return g;
    }

    /// Extended g: exactly zero outside ]0,1[.
    double operator()(double s) const {
        if (!(s > 0.0 && s < 1.0)) return 0.0;
        if (kind_ == Kind::cubic) return s * s * (1.0 - s);
        return fn_(s);
    }

    /// g on [0,1] without the extension (used by the admissibility checks).
    double raw(double s) const { return fn_(s); }

    double gmax() const noexcept { return gmax_; }
    double argmax() const noexcept { return argmax_; }
    double lipschitz_bound() const noexcept { return lipschitz_; }
    const std::string& name() const noexcept { return name_; }

    /// min of g on [eta1, eta2]: grid scan, then golden section around the
    /// grid minimum. Ties go to the smallest s.
    double min_on(double eta1, double eta2) const {
        if (!(eta1 < eta2)) throw DomainError("g_m requires eta1 < eta2");
        if (eta1 < 0.0 || eta2 > 1.0) throw DomainError("g_m requires 0 <= eta1 < eta2 <= 1");
        return scan_refine(eta1, eta2, [this](double s) { return raw(s); }).second;
    }

    void validate() const {
        if (std::abs(raw(0.0)) > 1e-12) throw AdmissibilityError("g(0) must vanish");
        if (std::abs(raw(1.0)) > 1e-12) throw AdmissibilityError("g(1) must vanish");
        constexpr int n = 10000;
        for (int i = 1; i < n; ++i) {
            const double s = static_cast<double>(i) / n;
            if (!(raw(s) > 0.0)) {
                std::ostringstream msg;
                msg << "g must be positive on ]0,1[ (fails at s=" << s << ")";
                throw AdmissibilityError(msg.str());
            }
        }
        // g(s)/s -> 0: ratios non-increasing as s -> 0+ and small against
        // the largest slope.
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 3; k <= 8; ++k) {
            const double s = std::pow(10.0, -k);
            const double r = raw(s) / s;
            if (r > prev * (1.0 + 1e-12) || r >= 1e-2 * lipschitz_)
                throw AdmissibilityError("g(s)/s must vanish as s -> 0+ (superlinearity at zero fails)");
            prev = r;
        }
    }

private:
    enum class Kind { cubic, function };

    Nonlinearity(Kind kind, Fn fn, std::string name) : kind_(kind), fn_(std::move(fn)), name_(std::move(name)) {}

    template <class F>
    static std::pair<double, double> scan_refine(double lo, double hi, F f) {
        constexpr int n = 4096;
        int best = 0;
        double best_v = f(lo);
        for (int i = 1; i <= n; ++i) {
            const double v = f(lo + (hi - lo) * i / n);
            if (v < best_v) {
                best_v = v;
                best = i;
            }
        }
        const double h = (hi - lo) / n;
        double a = std::max(lo, lo + (best - 1) * h), b = std::min(hi, lo + (best + 1) * h);
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - phi * (b - a), d = a + phi * (b - a);
        double fc = f(c), fd = f(d);
        while (b - a > 1e-10) {
            if (fc <= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d);
            }
        }
        const double s = 0.5 * (a + b);
        const double v = f(s);
        if (v < best_v) return {s, v};
        return {lo + best * h, best_v};
    }

    void finish() {
        constexpr int n = 10000;
        lipschitz_ = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = static_cast<double>(i) / n, b = static_cast<double>(i + 1) / n;
            lipschitz_ = std::max(lipschitz_, std::abs(raw(b) - raw(a)) * n);
        }
        const auto [s, v] = scan_refine(0.0, 1.0, [this](double x) { return -raw(x); });
        argmax_ = s;
        gmax_ = -v;
        validate();
    }

    Kind kind_;
    Fn fn_;
    std::string name_;
    double gmax_ = 0.0;
    double argmax_ = 0.0;
    double lipschitz_ = 0.0;
};

// ---------------------------------------------------------------------------
// Operations

/// lambda a^+(t) - mu a^-(t)
inline double eval_weight(const WeightSpec& w, const ParameterPair& p, double t) {
    if (!(t >= 0.0 && t <= w.T())) throw DomainError("eval_weight: t must lie in [0,T]");
    const double a = w(t);
    return a >= 0.0 ? p.lambda * a : p.mu * a;
}

inline double integral_Aplus(const WeightSpec& w, double t1, double t2) { return w.integral_plus(t1, t2); }
inline double integral_Aminus(const WeightSpec& w, double t1, double t2) { return w.integral_minus(t1, t2); }

inline double g_min_on(const Nonlinearity& g, double eta1, double eta2) { return g.min_on(eta1, eta2); }

namespace detail {

// int_{lo}^{hi} F(xi) d xi by adaptive quadrature, where F is itself a quadrature.
template <class F>
double nested(F&& inner, double lo, double hi) {
    return integrate_gk(std::function<double(double)>(std::forward<F>(inner)), lo, hi, 1e-9);
}

} // namespace detail

/// Lower bound on lambda forcing (nu0,0) at t=0 below nu1 at t1.
inline double threshold_lambda_star(const WeightSpec& w, const Nonlinearity& g, double nu0, double nu1, double t1) {
    if (!(0.0 < nu1 && nu1 < nu0 && nu0 < 1.0)) throw ParameterError("lambda*: requires 0 < nu1 < nu0 < 1");
    if (!(t1 > 0.0 && t1 < w.first_hump_end()))
        throw ParameterError("lambda*: requires 0 < t1 < sigma (first node)");
    const double inner = detail::nested([&](double xi) { return w.integral_plus(0.0, xi); }, 0.0, t1);
    const double den = g.min_on(nu1, nu0) * inner;
    if (!(den > 1e-300)) throw ParameterError("lambda*: weight vanishes on [0,t1]");
    return (nu0 - nu1) / den;
}

/// Mirror image of threshold_lambda_star on the last positive hump.
inline double threshold_lambda_star_star(const WeightSpec& w, const Nonlinearity& g, double nu1, double nuT,
                                         double t1) {
    if (!(0.0 < nu1 && nu1 < nuT && nuT < 1.0)) throw ParameterError("lambda**: requires 0 < nu1 < nuT < 1");
    if (!(t1 > w.last_hump_start() && t1 < w.T()))
        throw ParameterError("lambda**: requires tau < t1 < T (last node)");
    const double T = w.T();
    const double inner = detail::nested([&](double xi) { return w.integral_plus(xi, T); }, t1, T);
    const double den = g.min_on(nu1, nuT) * inner;
    if (!(den > 1e-300)) throw ParameterError("lambda**: weight vanishes on [t1,T]");
    return (nuT - nu1) / den;
}

/// Default omega_sigma: lambda ||a^+||_{L1(0,sigma)} max g.
inline double default_omega_sigma(const WeightSpec& w, const Nonlinearity& g, double lambda) {
    return lambda * w.integral_plus(0.0, w.sigma()) * g.gmax();
}

/// Lower bound on mu pushing a point at sigma with x = nu_sigma past nu2 at t2.
inline double threshold_mu_star(const WeightSpec& w, const Nonlinearity& g, double nu2, double nu_sigma, double t2,
                                double omega_sigma, double kappa) {
    const double sigma = w.sigma();
    if (!(0.0 < nu_sigma && nu_sigma < nu2 && nu2 < 1.0))
        throw ParameterError("mu*: requires 0 < nu_sigma < nu2 < 1");
    if (!(omega_sigma >= 0.0)) throw ParameterError("mu*: requires omega_sigma >= 0");
    if (!(kappa > sigma && kappa <= w.tau())) throw ParameterError("mu*: requires sigma < kappa <= tau");
    if (!(t2 > sigma)) throw ParameterError("mu*: requires t2 > sigma");
    if (t2 > kappa) throw ParameterError("mu*: requires t2 <= kappa");
    if (omega_sigma > 0.0 && t2 > sigma + nu_sigma / (2.0 * omega_sigma)) {
        std::ostringstream msg;
        msg << "mu*: requires t2 <= sigma + nu_sigma/(2 omega_sigma) = " << sigma + nu_sigma / (2.0 * omega_sigma);
        throw ParameterError(msg.str());
    }
    const double inner = detail::nested([&](double xi) { return w.integral_minus(sigma, xi); }, sigma, t2);
    const double den = g.min_on(0.5 * nu_sigma, nu2) * inner;
    if (!(den > 1e-300)) throw ParameterError("mu*: weight vanishes on [sigma,t2]");
    return (nu2 - nu_sigma + (t2 - sigma) * omega_sigma) / den;
}

/// Safety factor applied to the strict lower bound of delta_tilde.
inline constexpr double delta_tilde_margin = 1.01;

/// Initial slope above which (0,delta) at t=0 leaves the strip through
/// x = 1 before the end of the first positive hump.
inline double delta_tilde(const WeightSpec& w, const Nonlinearity& g, double lambda) {
    if (!(lambda >= 0.0)) throw ParameterError("delta_tilde: lambda must be nonnegative");
    const double sigma = w.first_hump_end();
    return delta_tilde_margin * (1.0 / sigma + lambda * w.integral_plus(0.0, sigma) * g.gmax());
}

/// Same bound for backward shots from T across the last positive hump.
inline double delta_tilde_right(const WeightSpec& w, const Nonlinearity& g, double lambda) {
    if (!(lambda >= 0.0)) throw ParameterError("delta_tilde: lambda must be nonnegative");
    const double tau = w.last_hump_start();
    const double len = w.T() - tau;
    return delta_tilde_margin * (1.0 / len + lambda * w.integral_plus(tau, w.T()) * g.gmax());
}

/// Below this mu the Neumann problem has no positive nontrivial solution.
inline double neumann_necessary_mu(const WeightSpec& w, double lambda) {
    if (!(lambda >= 0.0)) throw ParameterError("neumann_necessary_mu: lambda must be nonnegative");
    const double am = w.integral_minus(0.0, w.T());
    if (!(am > 0.0)) throw AdmissibilityError("sign condition violated: a^- vanishes on [0,T]");
    return lambda * w.integral_plus(0.0, w.T()) / am;
}

} // namespace indefshoot
