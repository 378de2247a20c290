#pragma once

// Images of the initial sets X01 = [0,1] x {0}, Y_GE0 = {0} x [0,cap] and
// Y_LE0 = {0} x [-cap,0] under the Poincare maps, adaptively sampled, and
// the band / break structure read off from them.

#include "indefshoot/integrator.hpp"
#include "indefshoot/parallel.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace indefshoot {

enum class SetKind { X01, Y_GE0, Y_LE0 };

inline const char* to_string(SetKind k) {
    switch (k) {
    case SetKind::X01: return "X01";
    case SetKind::Y_GE0: return "Y_GE0";
    case SetKind::Y_LE0: return "Y_LE0";
    }
    return "?";
}

struct InitialSet {
    SetKind kind = SetKind::X01;
    double anchor_time = 0.0;
    double y_cap = 0.0; ///< truncation of the rays; unused for X01

    static InitialSet x01(double anchor) { return {SetKind::X01, anchor, 0.0}; }
    static InitialSet y_ge0(double cap) { return {SetKind::Y_GE0, 0.0, cap}; }
    static InitialSet y_le0(double T, double cap) { return {SetKind::Y_LE0, T, cap}; }

    double s_min() const { return kind == SetKind::Y_LE0 ? -y_cap : 0.0; }
    double s_max() const {
        switch (kind) {
        case SetKind::X01: return 1.0;
        case SetKind::Y_GE0: return y_cap;
        case SetKind::Y_LE0: return 0.0;
        }
        return 0.0;
    }
    /// Parameter of the point (0,0).
    double trivial_param() const { return 0.0; }

    PhasePoint point(double s) const { return kind == SetKind::X01 ? PhasePoint{s, 0.0} : PhasePoint{0.0, s}; }

    bool forward(const WeightSpec& w) const { return anchor_time < 0.5 * w.T(); }

    void validate(const WeightSpec& w) const {
        if (anchor_time != 0.0 && anchor_time != w.T()) throw ParameterError("initial set must be anchored at 0 or T");
        if (kind != SetKind::X01 && !(y_cap > 0.0 && std::isfinite(y_cap)))
            throw ParameterError("y_cap must be positive");
        if (kind == SetKind::Y_GE0 && anchor_time != 0.0)
            throw ParameterError("Y_GE0 is shot forward and must be anchored at 0");
        if (kind == SetKind::Y_LE0 && anchor_time != w.T())
            throw ParameterError("Y_LE0 is shot backward and must be anchored at T");
    }
};

/// Default ray truncation: twice the bound above which the first (last)
/// hump forces an exit through x = 1.
inline double default_y_cap(const WeightSpec& w, const Nonlinearity& g, double lambda, bool forward) {
    return 2.0 * (forward ? delta_tilde(w, g, lambda) : delta_tilde_right(w, g, lambda));
}

enum class SampleLabel : std::uint8_t { interior, exit0, exit1, flagged };

inline const char* to_string(SampleLabel l) {
    switch (l) {
    case SampleLabel::interior: return "interior";
    case SampleLabel::exit0: return "exit0";
    case SampleLabel::exit1: return "exit1";
    case SampleLabel::flagged: return "flagged";
    }
    return "?";
}

struct ShootConfig {
    IntegratorConfig integrator;
    double refine_bound = 1e-3;     ///< sup-norm gap between adjacent in-strip images
    double exit_refine_bound = 2e-2; ///< same, on atan-compressed images, for gaps touching exits
    double min_gap = 1e-12;
    double break_tol = 1e-11;
    double flag_margin = 1e-9;
    std::size_t initial_samples = 257;
    std::size_t max_samples = 200000;
    unsigned threads = 0;

    void validate() const {
        integrator.validate();
        if (!(refine_bound > 0.0) || !(exit_refine_bound > 0.0)) throw ParameterError("refine bounds must be positive");
        if (!(min_gap > 0.0) || !(break_tol > 0.0)) throw ParameterError("gap tolerances must be positive");
        if (initial_samples < 64) throw ParameterError("initial_samples must be at least 64");
        if (max_samples < initial_samples) throw ParameterError("max_samples must be >= initial_samples");
    }
};

struct ContinuumSample {
    double s = 0.0;
    PhasePoint image;
    SampleLabel label = SampleLabel::interior; ///< exit side, or interior (never flagged)
    bool flagged = false;                      ///< image within flag_margin of x = 0 or x = 1
    bool equilibrium = false;                  ///< image is (0,0) or (1,0) within flag_margin
    double exit_time = std::numeric_limits<double>::quiet_NaN();

    /// Label as exported: flagged overrides the exit side.
    SampleLabel display_label() const { return flagged ? SampleLabel::flagged : label; }
};

/// Problem data carried by a continuum so that images at new parameters
/// can be computed later (intersection refinement).
struct ShootContext {
    WeightSpec w;
    Nonlinearity g;
    ParameterPair p;
};

class Continuum {
public:
    InitialSet set;
    double section_time = 0.0;
    std::vector<ContinuumSample> samples;
    std::vector<std::uint8_t> unresolved_gap; ///< per gap: refinement stopped at min_gap or the sample cap
    std::vector<std::string> warnings;
    std::shared_ptr<const ShootContext> context;

    bool forward() const { return context ? set.forward(context->w) : set.anchor_time == 0.0; }
    double anchor_time() const { return set.anchor_time; }

    /// Phi from the anchor to the section, at parameter s.
    PhasePoint map(double s, const IntegratorConfig& cfg) const {
        if (!context) throw NumericalError("continuum has no problem context");
        return poincare_map(context->w, context->g, context->p, set.anchor_time, section_time, set.point(s), cfg);
    }
};

struct BreakPoint {
    double s = 0.0;
    SampleLabel below = SampleLabel::interior; ///< label just below s
    SampleLabel above = SampleLabel::interior; ///< label just above s
    int exit_boundary = -1;                    ///< line reached by the image at s: 0, 1, or -1
    bool flagged = false;
};

struct Band {
    double s_lo = 0.0;
    double s_hi = 0.0;
    std::size_t first = 0; ///< sample indices, inclusive
    std::size_t last = 0;
};

struct CrossingStructure {
    SetKind kind = SetKind::X01;
    double section_time = 0.0;
    std::vector<BreakPoint> breaks;
    std::vector<Band> interior_bands; ///< ordered by distance from the trivial end
    /// exit boundary per break, same order as breaks
    std::vector<int> exit_labels() const {
        std::vector<int> out;
        for (const auto& b : breaks) out.push_back(b.exit_boundary);
        return out;
    }
    std::vector<double> break_params() const {
        std::vector<double> out;
        for (const auto& b : breaks) out.push_back(b.s);
        return out;
    }
    /// Index of the band containing s, counted from the trivial end.
    std::optional<std::size_t> band_of(double s, double tol = 1e-9) const {
        for (std::size_t i = 0; i < interior_bands.size(); ++i)
            if (s >= interior_bands[i].s_lo - tol && s <= interior_bands[i].s_hi + tol) return i;
        return std::nullopt;
    }
};

namespace detail {

inline void check_section(const WeightSpec& w, double kappa) {
    if (!(kappa > 0.0 && kappa < w.T())) throw ParameterError("section time must lie in ]0,T[");
    const auto neg = w.negativity_intervals();
    if (neg.empty()) return;
    for (const auto& [a, b] : neg)
        if (kappa >= a && kappa <= b) return;
    throw ParameterError("section time must lie in a negativity interval [sigma_i, tau_i]");
}

struct SectionHit {
    PhasePoint image;
    double exit_time = std::numeric_limits<double>::quiet_NaN();
    int exit_boundary = -1;
};

// One integration from the anchor through all sections (ordered in the
// direction of integration).
inline std::vector<SectionHit> shoot_one(const ShootContext& ctx, const InitialSet& set,
                                         const std::vector<double>& sections, double s,
                                         const IntegratorConfig& cfg) {
    const int dir = sections.back() > set.anchor_time ? 1 : -1;
    std::vector<SectionHit> out(sections.size());
    std::size_t next = 0;
    const auto on_step = [&](const DenseStep& ds, double t_to, const PhasePoint& st) {
        while (next < sections.size() && dir * sections[next] <= dir * t_to) {
            out[next].image = sections[next] == t_to ? st : ds.at(sections[next]);
            ++next;
        }
    };
    const FlowResult r =
        integrate_core(ctx.w, ctx.g, ctx.p, set.anchor_time, sections.back(), set.point(s), cfg, on_step);
    for (; next < sections.size(); ++next) out[next].image = r.end; // constant trajectory
    if (r.first_exit) {
        for (std::size_t k = 0; k < sections.size(); ++k) {
            if (dir * r.first_exit->t <= dir * sections[k]) {
                out[k].exit_time = r.first_exit->t;
                out[k].exit_boundary = r.first_exit->boundary;
            }
        }
    }
    return out;
}

inline ContinuumSample make_sample(double s, const SectionHit& h, double margin) {
    ContinuumSample c;
    c.s = s;
    c.image = h.image;
    c.exit_time = h.exit_time;
    c.label = h.exit_boundary < 0 ? SampleLabel::interior
                                  : (h.exit_boundary == 0 ? SampleLabel::exit0 : SampleLabel::exit1);
    const double x = h.image.x;
    c.flagged = std::abs(x) < margin || std::abs(x - 1.0) < margin;
    c.equilibrium = std::abs(h.image.y) < margin && c.flagged;
    return c;
}

inline double compressed_distance(const PhasePoint& a, const PhasePoint& b) {
    return std::max(std::abs(std::atan(a.x) - std::atan(b.x)), std::abs(std::atan(a.y) - std::atan(b.y)));
}

// 0: fine, 1: split, 2: would split but the gap is below the floor
inline int gap_status(const ContinuumSample& a, const ContinuumSample& b, const ShootConfig& cfg) {
    const double gap = b.s - a.s;
    if (a.label != b.label) return gap > cfg.break_tol ? 1 : 0;
    if (a.label == SampleLabel::interior) {
        if (sup_distance(a.image, b.image) <= cfg.refine_bound) return 0;
        return gap > cfg.min_gap ? 1 : 2;
    }
    if (compressed_distance(a.image, b.image) <= cfg.exit_refine_bound) return 0;
    return gap > cfg.min_gap ? 1 : 2;
}

inline std::vector<double> initial_grid(const InitialSet& set, std::size_t n) {
    std::vector<double> s;
    const double lo = set.s_min(), hi = set.s_max();
    for (std::size_t i = 0; i < n; ++i) s.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    s.back() = hi;
    // geometric clusters at the equilibrium ends
    for (int k = 4; k <= 40; ++k) {
        const double d = std::pow(10.0, -0.25 * k);
        if (set.kind == SetKind::Y_LE0) s.push_back(-d);
        else s.push_back(d);
        if (set.kind == SetKind::X01) s.push_back(1.0 - d);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

} // namespace detail

/// Shoots one initial set to several sections in a single pass per sample.
/// The returned continua share the parameter grid, which is the union of
/// what every section needs.
inline std::vector<Continuum> shoot_sections(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p,
                                             const InitialSet& set, std::vector<double> sections,
                                             const ShootConfig& cfg = {}) {
    cfg.validate();
    set.validate(w);
    if (sections.empty()) throw ParameterError("at least one section time is required");
    for (double k : sections) detail::check_section(w, k);
    const bool fwd = set.forward(w);
    // order of integration
    std::vector<std::size_t> order(sections.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fwd ? sections[a] < sections[b] : sections[a] > sections[b]; });
    std::vector<double> sorted;
    for (auto i : order) sorted.push_back(sections[i]);

    auto ctx = std::make_shared<ShootContext>(ShootContext{w, g, p});
    const std::size_t ns = sections.size();

    struct Row {
        double s;
        std::vector<ContinuumSample> by_section; // in integration order
    };
    auto evaluate = [&](const std::vector<double>& params) {
        std::vector<Row> rows(params.size());
        parallel_for(
            params.size(),
            [&](std::size_t i) {
                const auto hits = detail::shoot_one(*ctx, set, sorted, params[i], cfg.integrator);
                rows[i].s = params[i];
                rows[i].by_section.resize(ns);
                for (std::size_t k = 0; k < ns; ++k)
                    rows[i].by_section[k] = detail::make_sample(params[i], hits[k], cfg.flag_margin);
            },
            cfg.threads);
        return rows;
    };

    std::vector<Row> rows = evaluate(detail::initial_grid(set, cfg.initial_samples));
    std::vector<std::uint8_t> stuck;
    for (;;) {
        std::vector<double> mids;
        stuck.assign(rows.size() - 1, 0);
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            int worst = 0;
            for (std::size_t k = 0; k < ns; ++k)
                worst = std::max(worst, detail::gap_status(rows[i].by_section[k], rows[i + 1].by_section[k], cfg));
            if (worst == 1) {
                const double m = 0.5 * (rows[i].s + rows[i + 1].s);
                if (m > rows[i].s && m < rows[i + 1].s) mids.push_back(m);
                else stuck[i] = 1;
            } else if (worst == 2) {
                stuck[i] = 1;
            }
        }
        if (mids.empty()) break;
        if (rows.size() + mids.size() > cfg.max_samples) {
            for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
                int worst = 0;
                for (std::size_t k = 0; k < ns; ++k)
                    worst = std::max(worst, detail::gap_status(rows[i].by_section[k], rows[i + 1].by_section[k], cfg));
                if (worst != 0) stuck[i] = 1;
            }
            break;
        }
        auto fresh = evaluate(mids);
        std::vector<Row> merged;
        merged.reserve(rows.size() + fresh.size());
        std::merge(std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()),
                   std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()),
                   std::back_inserter(merged), [](const Row& a, const Row& b) { return a.s < b.s; });
        rows = std::move(merged);
    }

    std::vector<Continuum> out(ns);
    for (std::size_t j = 0; j < ns; ++j) {
        const std::size_t k = static_cast<std::size_t>(std::find(sorted.begin(), sorted.end(), sections[j]) - sorted.begin());
        Continuum& c = out[j];
        c.set = set;
        c.section_time = sections[j];
        c.context = ctx;
        c.samples.reserve(rows.size());
        for (const auto& r : rows) c.samples.push_back(r.by_section[k]);
        c.unresolved_gap = stuck;
        if (set.kind != SetKind::X01) {
            // the far end of the ray must leave through x = 1
            const auto& far = set.kind == SetKind::Y_GE0 ? c.samples.back() : c.samples.front();
            if (far.label != SampleLabel::exit1) {
                double ymin = far.image.y, ymax = far.image.y;
                for (const auto& smp : c.samples) {
                    ymin = std::min(ymin, smp.image.y);
                    ymax = std::max(ymax, smp.image.y);
                }
                char buf[256];
                std::snprintf(buf, sizeof buf,
                              "cap too small: y_cap=%.6g does not reach a right exit (image y range [%.6g, %.6g])",
                              set.y_cap, ymin, ymax);
                c.warnings.emplace_back(buf);
            }
        }
    }
    return out;
}

/// Image of one initial set at the section kappa.
inline Continuum shoot_set(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p, const InitialSet& set,
                           double kappa, const ShootConfig& cfg = {}) {
    return std::move(shoot_sections(w, g, p, set, {kappa}, cfg).front());
}

/// Bands of parameters whose trajectories stay in ]0,1[ x R up to the
/// section, and the break points delimiting them.
inline CrossingStructure detect_crossings(const Continuum& c) {
    CrossingStructure cs;
    cs.kind = c.set.kind;
    cs.section_time = c.section_time;
    const auto& sm = c.samples;
    if (sm.empty()) return cs;
    const std::size_t n = sm.size();

    auto line_of = [](const ContinuumSample& a) { return std::abs(a.image.x) <= std::abs(a.image.x - 1.0) ? 0 : 1; };
    auto exit_line = [](SampleLabel l) { return l == SampleLabel::exit0 ? 0 : (l == SampleLabel::exit1 ? 1 : -1); };

    // maximal runs of interior samples; runs made only of equilibrium
    // samples are not bands
    std::vector<Band> bands;
    std::vector<BreakPoint> breaks;
    for (std::size_t i = 0; i < n;) {
        if (sm[i].label != SampleLabel::interior) {
            const std::size_t j = i + 1;
            if (j < n && sm[j].label != SampleLabel::interior && sm[j].label != sm[i].label) {
                // exit0 next to exit1: a band thinner than the bisection tolerance
                BreakPoint b;
                b.s = 0.5 * (sm[i].s + sm[j].s);
                b.below = sm[i].label;
                b.above = sm[j].label;
                b.flagged = true;
                breaks.push_back(b);
            }
            ++i;
            continue;
        }
        std::size_t j = i;
        bool any_regular = false;
        while (j < n && sm[j].label == SampleLabel::interior) {
            any_regular = any_regular || !sm[j].equilibrium;
            ++j;
        }
        const std::size_t last = j - 1;
        if (any_regular) {
            Band band;
            band.first = i;
            band.last = last;
            // lower end
            BreakPoint lo;
            lo.above = SampleLabel::interior;
            if (i > 0) {
                lo.s = 0.5 * (sm[i - 1].s + sm[i].s);
                lo.below = sm[i - 1].label;
                lo.exit_boundary = exit_line(sm[i - 1].label);
                lo.flagged = sm[i - 1].flagged || sm[i].flagged;
                band.s_lo = lo.s;
                breaks.push_back(lo);
            } else {
                band.s_lo = sm[i].s;
                if (sm[i].flagged) {
                    lo.s = sm[i].s;
                    lo.below = SampleLabel::flagged;
                    lo.exit_boundary = line_of(sm[i]);
                    lo.flagged = true;
                    breaks.push_back(lo);
                }
            }
            BreakPoint hi;
            hi.below = SampleLabel::interior;
            if (j < n) {
                hi.s = 0.5 * (sm[last].s + sm[j].s);
                hi.above = sm[j].label;
                hi.exit_boundary = exit_line(sm[j].label);
                hi.flagged = sm[last].flagged || sm[j].flagged;
                band.s_hi = hi.s;
                breaks.push_back(hi);
            } else {
                band.s_hi = sm[last].s;
                if (sm[last].flagged) {
                    hi.s = sm[last].s;
                    hi.above = SampleLabel::flagged;
                    hi.exit_boundary = line_of(sm[last]);
                    hi.flagged = true;
                    breaks.push_back(hi);
                }
            }
            bands.push_back(band);
        }
        i = j;
    }
    std::sort(breaks.begin(), breaks.end(), [](const BreakPoint& a, const BreakPoint& b) { return a.s < b.s; });
    // count from the trivial end
    const bool reversed = c.set.kind == SetKind::Y_LE0;
    if (reversed) {
        std::reverse(bands.begin(), bands.end());
        std::reverse(breaks.begin(), breaks.end());
    }
    cs.breaks = std::move(breaks);
    cs.interior_bands = std::move(bands);
    return cs;
}

/// CSV with header s,x,y,label; an optional provenance line goes first as a
/// '#' comment.
inline void write_continuum_csv(std::ostream& os, const Continuum& c, std::string_view provenance = {}) {
    if (!provenance.empty()) os << "# " << provenance << '\n';
    os << "s,x,y,label\n";
    char buf[128];
    for (const auto& smp : c.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", smp.s, smp.image.x, smp.image.y);
        os << buf << to_string(smp.display_label()) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Monte-Carlo checks of the trapping and prohibited regions

struct RegionCheck {
    std::string region;
    std::size_t passed = 0;
    std::size_t total = 0;
    bool ok() const { return passed == total; }
};

struct RegionReport {
    std::vector<RegionCheck> regions;
    bool ok() const {
        return std::all_of(regions.begin(), regions.end(), [](const RegionCheck& r) { return r.ok(); });
    }
};

namespace detail {

// States along a trajectory: accepted steps plus a uniform grid.
template <class Pred>
bool all_states(const Trajectory& tr, Pred pred, bool skip_start) {
    const auto& ts = tr.t_grid();
    const auto& st = tr.states();
    for (std::size_t i = skip_start ? 1 : 0; i < st.size(); ++i)
        if (!pred(st[i])) return false;
    constexpr int n = 64;
    for (int k = 1; k <= n; ++k) {
        const double t = ts.front() + (ts.back() - ts.front()) * k / n;
        if (!pred(tr(t))) return false;
    }
    return true;
}

} // namespace detail

/// Four trapping regions: (0,y<0) and (1,y>0) forward, (0,y>0) and (1,y<0)
/// backward; the trajectory must stay in the corresponding open quadrant.
inline RegionReport check_trapping(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p,
                                   std::size_t n_samples, std::uint64_t seed = 1, const IntegratorConfig& cfg = {},
                                   double y_range = 5.0) {
    if (n_samples < 1) throw ParameterError("n_samples must be >= 1");
    const double T = w.T();
    struct Case {
        const char* name;
        double x0;
        double ysign;
        bool forward;
    };
    const Case cases[] = {{"x=0,y<0,forward", 0.0, -1.0, true},
                          {"x=1,y>0,forward", 1.0, 1.0, true},
                          {"x=0,y>0,backward", 0.0, 1.0, false},
                          {"x=1,y<0,backward", 1.0, -1.0, false}};
    RegionReport rep;
    for (std::size_t c = 0; c < 4; ++c) {
        const Case& cs = cases[c];
        std::mt19937_64 rng(seed * 4 + c);
        std::uniform_real_distribution<double> ut(0.0, T), uy(0.0, y_range);
        std::vector<std::pair<double, double>> draws;
        while (draws.size() < n_samples) {
            const double t0 = ut(rng), y = uy(rng);
            const double tend = cs.forward ? T : 0.0;
            if (y == 0.0 || t0 == tend) continue; // equilibrium or empty interval
            draws.emplace_back(t0, cs.ysign * y);
        }
        std::vector<std::uint8_t> ok(n_samples, 0);
        parallel_for(n_samples, [&](std::size_t i) {
            const auto [t0, y0] = draws[i];
            const Trajectory tr = integrate(w, g, p, t0, cs.forward ? T : 0.0, {cs.x0, y0}, cfg);
            ok[i] = detail::all_states(
                tr,
                [&](const PhasePoint& q) {
                    const bool xin = cs.x0 == 0.0 ? q.x < 0.0 : q.x > 1.0;
                    const bool yin = cs.ysign < 0 ? q.y < 0.0 : q.y > 0.0;
                    return xin && yin;
                },
                true);
        });
        RegionCheck rc{cs.name, static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1)), n_samples};
        rep.regions.push_back(rc);
    }
    return rep;
}

/// Forward shots from 0 never visit E0 = ]-inf,0[ x [0,inf[ or
/// E1 = ]1,inf[ x ]-inf,0]; backward shots from T never visit the mirrored
/// E0' = ]-inf,0[ x ]-inf,0] or E1' = ]1,inf[ x [0,inf[.
inline RegionReport check_prohibited(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p,
                                     std::size_t n_samples, std::uint64_t seed = 1,
                                     const IntegratorConfig& cfg = {}, double y_range = 5.0) {
    if (n_samples < 1) throw ParameterError("n_samples must be >= 1");
    const double T = w.T();
    RegionReport rep;
    for (int dir = 0; dir < 2; ++dir) {
        const bool fwd = dir == 0;
        std::mt19937_64 rng(seed * 2 + static_cast<std::uint64_t>(dir) + 1000);
        std::uniform_real_distribution<double> ux(0.0, 1.0), uy(-y_range, y_range);
        std::vector<PhasePoint> starts;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double x = ux(rng);
            const double y = uy(rng);
            starts.emplace_back(x, y);
        }
        std::vector<std::uint8_t> ok0(n_samples, 0), ok1(n_samples, 0);
        parallel_for(n_samples, [&](std::size_t i) {
            const Trajectory tr = integrate(w, g, p, fwd ? 0.0 : T, fwd ? T : 0.0, starts[i], cfg);
            ok0[i] = detail::all_states(
                tr, [&](const PhasePoint& q) { return !(q.x < 0.0 && (fwd ? q.y >= 0.0 : q.y <= 0.0)); }, false);
            ok1[i] = detail::all_states(
                tr, [&](const PhasePoint& q) { return !(q.x > 1.0 && (fwd ? q.y <= 0.0 : q.y >= 0.0)); }, false);
        });
        rep.regions.push_back({fwd ? "E0 forward" : "E0' backward",
                               static_cast<std::size_t>(std::count(ok0.begin(), ok0.end(), 1)), n_samples});
        rep.regions.push_back({fwd ? "E1 forward" : "E1' backward",
                               static_cast<std::size_t>(std::count(ok1.begin(), ok1.end(), 1)), n_samples});
    }
    return rep;
}

} // namespace indefshoot
