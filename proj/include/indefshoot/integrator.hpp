#pragma once

// Dormand-Prince 5(4) integration of
//     x' = y,  y' = -(lambda a^+(t) - mu a^-(t)) g(x)
// forward or backward in time, with dense output and detection of the
// crossings of x = 0 and x = 1.

#include "indefshoot/errors.hpp"
#include "indefshoot/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

namespace indefshoot {

/// (x, y) = (u, u')
struct PhasePoint {
    double x = 0.0;
    double y = 0.0;

    PhasePoint() = default;
    PhasePoint(double x_, double y_) : x(x_), y(y_) {
        if (!std::isfinite(x_) || !std::isfinite(y_)) throw DomainError("PhasePoint: non-finite coordinate");
    }

    friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

inline double sup_distance(const PhasePoint& a, const PhasePoint& b) {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double event_tol = 1e-12;

    void validate() const {
        if (!(rel_tol >= 1e-13)) throw ParameterError("rel_tol must be >= 1e-13");
        if (!(abs_tol > 0.0)) throw ParameterError("abs_tol must be positive");
        if (!(max_step > 0.0)) throw ParameterError("max_step must be positive");
        if (!(event_tol > 0.0)) throw ParameterError("event_tol must be positive");
    }
};

/// Crossing of the line x = boundary (0 or 1).
struct StripEvent {
    double t = 0.0;
    int boundary = 0;
    int direction = 0; ///< sign of dx/dt at the crossing
    bool leaving = false; ///< true when the state moves out of [0,1] x R
};

/// One accepted step with its continuous extension.
struct DenseStep {
    double t_from = 0.0;
    double t_to = 0.0;
    std::array<double, 5> cx{};
    std::array<double, 5> cy{};

    double lo() const noexcept { return std::min(t_from, t_to); }
    double hi() const noexcept { return std::max(t_from, t_to); }

    PhasePoint at(double t) const {
        const double th = (t - t_from) / (t_to - t_from);
        const double th1 = 1.0 - th;
        auto ev = [&](const std::array<double, 5>& c) {
            return c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
        };
        return {ev(cx), ev(cy)};
    }
};

/// Dense solution of the planar system on [min(t0,t1), max(t0,t1)].
class Trajectory {
public:
    Trajectory() = default;

    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }
    int direction() const noexcept { return t_end_ >= t_start_ ? 1 : -1; }

    /// Accepted step times in integration order.
    const std::vector<double>& t_grid() const noexcept { return t_grid_; }
    const std::vector<PhasePoint>& states() const noexcept { return states_; }
    const std::vector<StripEvent>& events() const noexcept { return events_; }
    const std::vector<DenseStep>& steps() const noexcept { return steps_; }

    double t_min() const noexcept { return std::min(t_start_, t_end_); }
    double t_max() const noexcept { return std::max(t_start_, t_end_); }

    PhasePoint front() const { return states_.front(); }
    PhasePoint back() const { return states_.back(); }

    /// Dense evaluation anywhere in the covered interval.
    PhasePoint operator()(double t) const {
        if (t < t_min() - 1e-13 || t > t_max() + 1e-13) throw DomainError("Trajectory: t outside the covered interval");
        if (steps_.empty()) return states_.front();
        auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                                   [](double v, const DenseStep& s) { return v < s.lo(); });
        if (it != steps_.begin()) --it;
        return it->at(t);
    }

    /// Joins two runs covering adjacent intervals (in any integration
    /// direction) into one forward-ordered trajectory.
    static Trajectory stitch(const Trajectory& a, const Trajectory& b) {
        const Trajectory& lo = a.t_min() <= b.t_min() ? a : b;
        const Trajectory& hi = a.t_min() <= b.t_min() ? b : a;
        if (std::abs(lo.t_max() - hi.t_min()) > 1e-12) throw DomainError("stitch expects adjacent intervals");
        Trajectory out;
        out.t_start_ = lo.t_min();
        out.t_end_ = hi.t_max();
        auto append = [&](const Trajectory& tr) {
            const bool fwd = tr.direction() > 0;
            const std::size_t n = tr.t_grid_.size();
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t i = fwd ? k : n - 1 - k;
                if (!out.t_grid_.empty() && tr.t_grid_[i] <= out.t_grid_.back()) continue;
                out.t_grid_.push_back(tr.t_grid_[i]);
                out.states_.push_back(tr.states_[i]);
            }
            out.steps_.insert(out.steps_.end(), tr.steps_.begin(), tr.steps_.end());
            if (fwd) out.events_.insert(out.events_.end(), tr.events_.begin(), tr.events_.end());
            else out.events_.insert(out.events_.end(), tr.events_.rbegin(), tr.events_.rend());
        };
        append(lo);
        append(hi);
        return out;
    }

    /// Constant trajectory (used for equilibria submitted to the verifier).
    static Trajectory constant(double t0, double t1, PhasePoint p) {
        Trajectory out;
        out.t_start_ = t0;
        out.t_end_ = t1;
        out.t_grid_ = {t0, t1};
        out.states_ = {p, p};
        DenseStep s;
        s.t_from = std::min(t0, t1);
        s.t_to = std::max(t0, t1);
        s.cx = {p.x, 0, 0, 0, 0};
        s.cy = {p.y, 0, 0, 0, 0};
        out.steps_.push_back(s);
        return out;
    }

private:
    friend class TrajectoryRecorder;

    double t_start_ = 0.0;
    double t_end_ = 0.0;
    std::vector<double> t_grid_;
    std::vector<PhasePoint> states_;
    std::vector<DenseStep> steps_; // ascending in time
    std::vector<StripEvent> events_;
};

/// Endpoint plus strip diagnostics of one run.
struct FlowResult {
    PhasePoint end;
    std::optional<StripEvent> first_exit; ///< first move out of [0,1] x R
    double min_x = 0.0;
    double max_x = 0.0;
    std::size_t steps = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau and dense-output weights.
struct Dopri5 {
    static constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
    static constexpr double a21 = 0.2;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                            a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

using State = std::array<double, 2>;

// Right-hand side restricted to one sign segment of the weight, written in
// the reversed variable r = dir * t.
struct SegmentField {
    const WeightSpec* w;
    const Nonlinearity* g;
    double coef; // lambda on positive segments, mu on negative ones
    bool positive;
    std::size_t seg;
    double dir;

    double weight(double t) const {
        const double a = w->eval_in_segment(seg, t);
        return positive ? coef * std::max(a, 0.0) : -coef * std::max(-a, 0.0);
    }

    State operator()(double r, const State& s) const {
        const double t = dir * r;
        const double gx = (*g)(s[0]);
        const double f = gx == 0.0 ? 0.0 : -weight(t) * gx;
        return {dir * s[1], dir * f};
    }
};

struct NoSteps {
    void operator()(const DenseStep&, double, const PhasePoint&) const {}
};

inline int strip_side(double x) { return x < 0.0 ? -1 : (x > 1.0 ? 1 : 0); }

} // namespace detail

/// Runs the integrator from (t0, start) to t1, calling on_step for every
/// accepted step and collecting strip events. Backward runs (t1 < t0) are
/// forward runs of the time-reversed field; nodes are step endpoints.
template <class OnStep>
FlowResult integrate_core(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p, double t0,
                          double t1, PhasePoint start, const IntegratorConfig& cfg, OnStep&& on_step,
                          std::vector<StripEvent>* events = nullptr) {
    using detail::Dopri5;
    using detail::State;
    const double T = w.T();
    if (!(t0 >= 0.0 && t0 <= T && t1 >= 0.0 && t1 <= T)) throw DomainError("integrate: times must lie in [0,T]");

    FlowResult res;
    res.end = start;
    res.min_x = res.max_x = start.x;
    if (t0 == t1) return res;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const double hmin = 1e-14 * span;

    // segment boundaries in integration order
    std::vector<double> stops;
    for (double n : w.nodes())
        if (n > std::min(t0, t1) && n < std::max(t0, t1)) stops.push_back(n);
    if (dir < 0) std::reverse(stops.begin(), stops.end());
    stops.push_back(t1);

    State y{start.x, start.y};
    int side = detail::strip_side(y[0]);
    double t_cur = t0;
    double h_guess = 0.0;
    double facold = 1e-4;
    const double rtol = cfg.rel_tol, atol = cfg.abs_tol;
    constexpr double safe = 0.9, beta = 0.04, facl = 0.2, facr = 10.0;
    const double expo1 = 0.2 - beta * 0.75;
    constexpr std::size_t max_steps = 50'000'000;

    // Crossings of x = 0 and x = 1 between two probes with different strip sides.
    auto record_event = [&](const DenseStep& ds, double ta, double tb, double xa, double xb, int side_a,
                            int side_b) {
        for (int b = 0; b <= 1; ++b) {
            const double fa = xa - b, fb = xb - b;
            const bool through = (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0);
            const bool from_line = fa == 0.0 && ((b == 0 && fb < 0.0) || (b == 1 && fb > 0.0));
            if (!through && !from_line) continue;
            double lo = ta, hi = tb;
            if (through) {
                while (std::abs(hi - lo) > cfg.event_tol) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = ds.at(mid).x - b;
                    if ((fm < 0.0) == (fa < 0.0) && fm != 0.0) lo = mid;
                    else hi = mid;
                }
            } else {
                hi = lo;
            }
            StripEvent e;
            e.t = 0.5 * (lo + hi);
            e.boundary = b;
            e.direction = (fb > fa ? 1 : -1) * (tb > ta ? 1 : -1);
            e.leaving = (b == 0 && fb < 0.0) || (b == 1 && fb > 0.0);
            if (e.leaving && side_a == 0 && !res.first_exit) res.first_exit = e;
            if (events) events->push_back(e);
        }
        (void)side_b;
    };

    // time of the first crossing of x = 0 or x = 1 inside a step, NaN if none
    auto first_crossing = [&](const DenseStep& ds, double x0, double x1) {
        constexpr int probes = 8;
        double tp = ds.t_from, xp = x0;
        for (int q = 1; q <= probes; ++q) {
            const double tq = q == probes ? ds.t_to : ds.t_from + (ds.t_to - ds.t_from) * q / probes;
            const double xq = q == probes ? x1 : ds.at(tq).x;
            if (detail::strip_side(xq) != detail::strip_side(xp)) {
                const double b = (std::min(xp, xq) < 0.0 && std::max(xp, xq) >= 0.0) ? 0.0 : 1.0;
                if (std::abs(x0 - b) < 1e-12) break; // starts on the line
                double lo = tp, hi = tq;
                const bool below = xp < b;
                while (std::abs(hi - lo) > cfg.event_tol) {
                    const double mid = 0.5 * (lo + hi);
                    if ((ds.at(mid).x < b) == below) lo = mid;
                    else hi = mid;
                }
                return 0.5 * (lo + hi);
            }
            tp = tq;
            xp = xq;
        }
        return std::numeric_limits<double>::quiet_NaN();
    };
    int landings = 0;

    for (double t_stop : stops) {
        const std::size_t seg = w.segment_index(0.5 * (t_cur + t_stop));
        const auto& sg = w.segments()[std::min(seg, w.segments().size() - 1)];
        const bool positive = sg.sign == HumpSign::positive;
        const detail::SegmentField f{&w, &g, positive ? p.lambda : p.mu, positive, seg, dir};

        double r = dir * t_cur;
        const double r_end = dir * t_stop;
        State k1 = f(r, y);
        double h;
        if (h_guess > 0.0) {
            h = h_guess;
        } else {
            // initial step (Hairer)
            double dnf = 0.0, dny = 0.0;
            for (int i = 0; i < 2; ++i) {
                const double sk = atol + rtol * std::abs(y[i]);
                dnf += (k1[i] / sk) * (k1[i] / sk);
                dny += (y[i] / sk) * (y[i] / sk);
            }
            h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
            h = std::min(h, cfg.max_step);
            State y1{y[0] + h * k1[0], y[1] + h * k1[1]};
            State k2 = f(r + h, y1);
            double der2 = 0.0;
            for (int i = 0; i < 2; ++i) {
                const double sk = atol + rtol * std::abs(y[i]);
                der2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
            }
            der2 = std::sqrt(der2) / h;
            const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
            const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
            h = std::min({100.0 * std::abs(h), h1, cfg.max_step});
        }

        bool last = false;
        while (!last) {
            if (res.steps > max_steps) throw NumericalError("integrate: step budget exhausted");
            h = std::min(h, cfg.max_step);
            // outside the strip the field vanishes and the error estimate is
            // zero, so a step must not jump over the strip: stop at the entry
            bool capped = false;
            if (side != 0 && k1[0] != 0.0) {
                const double dist = side < 0 ? -y[0] : y[0] - 1.0;
                const double t_in = side < 0 ? -y[0] / k1[0] : (y[0] - 1.0) / -k1[0];
                if (dist > 1e-12 && t_in > hmin && t_in < h) {
                    h = t_in;
                    capped = true;
                }
            }
            if (r + (capped ? 1.0 : 1.01) * h >= r_end) {
                h = r_end - r;
                last = true;
            }
            if (h < hmin && !(last && h > 0.0)) {
                std::ostringstream msg;
                msg << "integrate: step size underflow at t=" << dir * r;
                throw StiffnessError(msg.str(), dir * r);
            }
            State ys;
            ys = {y[0] + h * Dopri5::a21 * k1[0], y[1] + h * Dopri5::a21 * k1[1]};
            const State k2 = f(r + Dopri5::c2 * h, ys);
            for (int i = 0; i < 2; ++i) ys[i] = y[i] + h * (Dopri5::a31 * k1[i] + Dopri5::a32 * k2[i]);
            const State k3 = f(r + Dopri5::c3 * h, ys);
            for (int i = 0; i < 2; ++i)
                ys[i] = y[i] + h * (Dopri5::a41 * k1[i] + Dopri5::a42 * k2[i] + Dopri5::a43 * k3[i]);
            const State k4 = f(r + Dopri5::c4 * h, ys);
            for (int i = 0; i < 2; ++i)
                ys[i] = y[i]
                        + h * (Dopri5::a51 * k1[i] + Dopri5::a52 * k2[i] + Dopri5::a53 * k3[i] + Dopri5::a54 * k4[i]);
            const State k5 = f(r + Dopri5::c5 * h, ys);
            for (int i = 0; i < 2; ++i)
                ys[i] = y[i]
                        + h * (Dopri5::a61 * k1[i] + Dopri5::a62 * k2[i] + Dopri5::a63 * k3[i] + Dopri5::a64 * k4[i]
                               + Dopri5::a65 * k5[i]);
            const State k6 = f(r + h, ys);
            State y1;
            for (int i = 0; i < 2; ++i)
                y1[i] = y[i]
                        + h * (Dopri5::a71 * k1[i] + Dopri5::a73 * k3[i] + Dopri5::a74 * k4[i] + Dopri5::a75 * k5[i]
                               + Dopri5::a76 * k6[i]);
            const double r_new = last ? r_end : r + h;
            const State k7 = f(r_new, y1);

            double err = 0.0;
            for (int i = 0; i < 2; ++i) {
                const double e = h * (Dopri5::e1 * k1[i] + Dopri5::e3 * k3[i] + Dopri5::e4 * k4[i]
                                      + Dopri5::e5 * k5[i] + Dopri5::e6 * k6[i] + Dopri5::e7 * k7[i]);
                const double sk = atol + rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
                err += (e / sk) * (e / sk);
            }
            err = std::sqrt(err / 2.0);

            const double fac11 = std::pow(err, expo1);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(1.0 / facr, std::min(1.0 / facl, fac / safe));
            double hnew = h / fac;

            if (err <= 1.0) {
                facold = std::max(err, 1e-4);
                ++res.steps;
                DenseStep ds;
                ds.t_from = dir * r;
                ds.t_to = dir * r_new;
                for (int i = 0; i < 2; ++i) {
                    const double ydiff = y1[i] - y[i];
                    const double bspl = h * k1[i] - ydiff;
                    auto& c = i == 0 ? ds.cx : ds.cy;
                    c[0] = y[i];
                    c[1] = ydiff;
                    c[2] = bspl;
                    c[3] = ydiff - h * k7[i] - bspl;
                    c[4] = h * (Dopri5::d1 * k1[i] + Dopri5::d3 * k3[i] + Dopri5::d4 * k4[i] + Dopri5::d5 * k5[i]
                                + Dopri5::d6 * k6[i] + Dopri5::d7 * k7[i]);
                }
                // g_ext has a kink at x = 0 and x = 1: shorten a step that
                // crosses either line inside so that it ends on the line
                if (landings < 8) {
                    const double tc = first_crossing(ds, y[0], y1[0]);
                    const double eps = 10.0 * cfg.event_tol + 1e-9 * h;
                    if (!std::isnan(tc) && std::abs(tc - ds.t_from) > eps && std::abs(ds.t_to - tc) > eps) {
                        h = std::abs(tc - ds.t_from);
                        last = false;
                        ++landings;
                        continue;
                    }
                }
                landings = 0;
                // strip bookkeeping on four probes per step
                double tp = ds.t_from, xp = y[0];
                int sp = side;
                for (int q = 1; q <= 4; ++q) {
                    const double tq = q == 4 ? ds.t_to : ds.t_from + (ds.t_to - ds.t_from) * (0.25 * q);
                    const double xq = q == 4 ? y1[0] : ds.at(tq).x;
                    const int sq = detail::strip_side(xq);
                    res.min_x = std::min(res.min_x, xq);
                    res.max_x = std::max(res.max_x, xq);
                    if (sq != sp) record_event(ds, tp, tq, xp, xq, sp, sq);
                    tp = tq;
                    xp = xq;
                    sp = sq;
                }
                side = sp;
                on_step(ds, ds.t_to, PhasePoint{y1[0], y1[1]});
                y = y1;
                k1 = k7;
                r = r_new;
                if (std::abs(hnew) > cfg.max_step) hnew = cfg.max_step;
                h_guess = hnew;
                h = hnew;
            } else {
                if (!std::isfinite(err)) hnew = 0.1 * h;
                else hnew = h / std::min(1.0 / facl, fac11 / safe);
                h = hnew;
                last = false;
            }
        }
        t_cur = t_stop;
    }
    res.end = PhasePoint{y[0], y[1]};
    return res;
}

class TrajectoryRecorder {
public:
    explicit TrajectoryRecorder(Trajectory& t) : traj_(t) {}
    void operator()(const DenseStep& ds, double t, const PhasePoint& s) {
        traj_.steps_.push_back(ds);
        traj_.t_grid_.push_back(t);
        traj_.states_.push_back(s);
    }
    static void begin(Trajectory& t, double t0, double t1, PhasePoint start) {
        t.t_start_ = t0;
        t.t_end_ = t1;
        t.t_grid_ = {t0};
        t.states_ = {start};
        t.steps_.clear();
        t.events_.clear();
    }
    static void finish(Trajectory& t, std::vector<StripEvent> events) {
        if (t.t_end_ < t.t_start_) std::reverse(t.steps_.begin(), t.steps_.end());
        t.events_ = std::move(events);
        if (t.steps_.empty()) t = Trajectory::constant(t.t_start_, t.t_end_, t.states_.front());
    }

private:
    Trajectory& traj_;
};

/// Full dense solution from (t0, start) to t1.
inline Trajectory integrate(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p, double t0, double t1,
                            PhasePoint start, const IntegratorConfig& cfg = {}) {
    cfg.validate();
    if (t0 == t1) throw DomainError("integrate: t0 and t1 must differ");
    Trajectory traj;
    TrajectoryRecorder::begin(traj, t0, t1, start);
    std::vector<StripEvent> events;
    integrate_core(w, g, p, t0, t1, start, cfg, TrajectoryRecorder(traj), &events);
    TrajectoryRecorder::finish(traj, std::move(events));
    return traj;
}

/// Endpoint and strip diagnostics without storing the trajectory.
inline FlowResult flow(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p, double t0, double t1,
                       PhasePoint start, const IntegratorConfig& cfg = {}) {
    return integrate_core(w, g, p, t0, t1, start, cfg, detail::NoSteps{});
}

/// Phi_{t_from}^{t_to}(pt)
inline PhasePoint poincare_map(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p, double t_from,
                               double t_to, PhasePoint pt, const IntegratorConfig& cfg = {}) {
    return flow(w, g, p, t_from, t_to, pt, cfg).end;
}

/// CSV t,x,y with one row per accepted step, increasing t.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, std::string_view provenance = {}) {
    if (!provenance.empty()) os << "# " << provenance << '\n';
    os << "t,x,y\n";
    const auto& ts = tr.t_grid();
    const auto& st = tr.states();
    const bool fwd = ts.size() < 2 || ts.back() > ts.front();
    char buf[96];
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const std::size_t i = fwd ? k : ts.size() - 1 - k;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", ts[i], st[i].x, st[i].y);
        os << buf;
    }
}

} // namespace indefshoot
