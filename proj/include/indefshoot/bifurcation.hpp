#pragma once

// Natural-parameter sweeps: all solutions at every grid value, linked into
// branches, with turning / transcritical / pitchfork tags.

#include "indefshoot/shooting.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace indefshoot {

enum class SweepParameter { mu, lambda };

struct SweepConfig {
    SweepParameter parameter = SweepParameter::mu;
    double fixed = 20.0; ///< lambda when sweeping mu, mu when sweeping lambda
    double min = 0.0;
    double max = 600.0;
    std::size_t n_steps = 121;
    BoundaryConditionType bc = BoundaryConditionType::neumann();
    double kappa = std::numeric_limits<double>::quiet_NaN();
    SolverConfig solver = default_solver();
    double match_tol = 0.05;      ///< scaled (parameter, u0) distance for linking consecutive levels
    double cluster_tol = 1e-3;    ///< near-trivial same-fingerprint solutions closer than this are one point
    double trivial_tol = 1e-3;    ///< endpoint distance to a trivial state for a transcritical tag
    double symmetry_tol = 1e-6;   ///< mirror-symmetric solution when both ends agree to this
    double duplicate_tol = 1e-6;  ///< solutions closer than this at one level are one point
    int max_skip = 2;             ///< levels a branch may miss before it is considered ended
    int refine_rounds = 6;        ///< bisection points inserted at every dangling branch end
    int tag_refine_points = 4;    ///< extra parameter values around every singular tag

    static SolverConfig default_solver() {
        SolverConfig s;
        s.shoot.refine_bound = 1e-2;
        s.allow_zero_mu = true;
        return s;
    }

    void validate() const {
        if (!(min < max)) throw ParameterError("sweep range requires min < max");
        if (n_steps < 2) throw ParameterError("n_steps must be >= 2");
        if (parameter == SweepParameter::mu && min < 0.0) throw ParameterError("mu range must be nonnegative");
        if (parameter == SweepParameter::lambda && !(min > 0.0)) throw ParameterError("lambda range must be positive");
        if (!(match_tol > 0.0)) throw ParameterError("match_tol must be positive");
    }
};

enum class SingularKind { turning, transcritical, pitchfork_candidate, endpoint };

inline const char* to_string(SingularKind k) {
    switch (k) {
    case SingularKind::turning: return "turning";
    case SingularKind::transcritical: return "transcritical";
    case SingularKind::pitchfork_candidate: return "pitchfork-candidate";
    case SingularKind::endpoint: return "endpoint";
    }
    return "?";
}

struct BranchPoint {
    double mu = 0.0; ///< swept parameter value
    double u0 = 0.0;
    double du0 = 0.0;
    double uT = 0.0;
    double duT = 0.0;
    int band_l = -1;
    int band_r = -1;
    double u_min = 0.0;
    double u_max = 0.0;
};

struct SingularTag {
    double mu = 0.0;
    double u0 = 0.0;
    SingularKind kind = SingularKind::endpoint;
    std::size_t index = 0;       ///< point index on the branch
    bool symmetric_weight = false; ///< pitchfork candidates: weight even about T/2
};

struct Branch {
    std::size_t id = 0;
    std::vector<BranchPoint> points;
    std::vector<SingularTag> tags;
    bool closed = false;
    bool trivial = false; ///< reference rows u0 = 0 and u0 = 1
    bool fragile = false; ///< fewer than two points
    /// Points k where the chain passes a pitchfork: points k-1 and k are the
    /// two arms meeting at a symmetric solution of another branch.
    std::vector<std::size_t> pitchfork_joins;

    std::size_t count(SingularKind k) const {
        return static_cast<std::size_t>(
            std::count_if(tags.begin(), tags.end(), [k](const SingularTag& t) { return t.kind == k; }));
    }
};

/// Solutions found at one parameter value.
struct SweepLevel {
    double mu = 0.0;
    std::vector<BranchPoint> points;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    SweepConfig config;
    std::vector<SweepLevel> levels; ///< sorted by parameter, includes refinement points
    std::vector<Branch> branches;   ///< nontrivial first, then the trivial reference rows
    std::vector<std::string> log;

    std::vector<const Branch*> nontrivial() const {
        std::vector<const Branch*> out;
        for (const auto& b : branches)
            if (!b.trivial) out.push_back(&b);
        return out;
    }
};

namespace detail {

// Solutions are compared through their free boundary data (u or u' at each
// end, slopes scaled by the initial-set caps). Mirror images u(T - t) swap
// the two coordinates, so symmetric-weight branches stay apart.
struct Embed {
    BoundaryConditionType bc = BoundaryConditionType::neumann();
    double ycap_left = 1.0;
    double ycap_right = 1.0;
    bool mirror = false; ///< even weight and the same condition at both ends
    double symmetry_tol = 1e-6;

    std::array<double, 2> operator()(const BranchPoint& p) const {
        return {bc.left == BcSide::slope_zero ? p.u0 : p.du0 / ycap_left,
                bc.right == BcSide::slope_zero ? p.uT : -p.duT / ycap_right};
    }
    double v(const BranchPoint& p) const { return (*this)(p)[0]; }
    bool symmetric(const BranchPoint& p) const {
        const auto c = (*this)(p);
        return mirror && std::abs(c[0] - c[1]) < symmetry_tol;
    }
    double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) const {
        return std::hypot(a[0] - b[0], a[1] - b[1]);
    }
};

inline bool near_trivial(const BranchPoint& p, const BoundaryConditionType& bc, double tol) {
    if (bc.left == BcSide::slope_zero) return p.u0 < tol || p.u0 > 1.0 - tol;
    return p.u_max < tol || p.u_min > 1.0 - tol;
}

inline SweepLevel solve_level(const WeightSpec& w, const Nonlinearity& g, const SweepConfig& sc, double v) {
    SweepLevel lv;
    lv.mu = v;
    const ParameterPair p = sc.parameter == SweepParameter::mu ? ParameterPair{sc.fixed, v} : ParameterPair{v, sc.fixed};
    try {
        const auto sols = solve_multiplicity(w, g, p, sc.bc, sc.kappa, sc.solver);
        for (const auto& s : sols)
            lv.points.push_back({v, s.u0(), s.du0(), s.uT(), s.duT(), s.band_index_left, s.band_index_right, s.residuals.u_min,
                                 s.residuals.u_max});
    } catch (const std::exception& e) {
        lv.failed = true;
        lv.error = e.what();
    }
    return lv;
}

// Collapse near-trivial same-fingerprint solutions closer than tol, and any
// solutions closer than dup_tol, into their median. Other close pairs are
// genuine (both sides of a fold).
inline void cluster_level(SweepLevel& lv, const Embed& em, double tol, double trivial_tol, double dup_tol) {
    const auto& bc = em.bc;
    std::vector<BranchPoint> pts = lv.points;
    std::sort(pts.begin(), pts.end(), [&](const BranchPoint& a, const BranchPoint& b) { return em.v(a) < em.v(b); });
    std::vector<BranchPoint> out;
    for (std::size_t i = 0; i < pts.size();) {
        std::size_t j = i + 1;
        auto joins = [&](std::size_t k) {
            const double d = em.dist(em(pts[k]), em(pts[k - 1]));
            if (d < dup_tol) return true;
            return near_trivial(pts[i], bc, trivial_tol) && near_trivial(pts[k], bc, trivial_tol)
                   && pts[k].band_l == pts[i].band_l && pts[k].band_r == pts[i].band_r && d < tol;
        };
        while (j < pts.size() && joins(j)) ++j;
        out.push_back(pts[i + (j - i) / 2]);
        i = j;
    }
    lv.points = std::move(out);
}

struct Arc {
    std::vector<std::pair<std::size_t, std::size_t>> pts; // (level, point)
};

inline std::vector<Arc> link_arcs(const std::vector<SweepLevel>& levels, const SweepConfig& sc, const Embed& em) {
    const double range = sc.max - sc.min;
    std::vector<Arc> arcs;
    std::map<std::size_t, int> open; // arcs still open, with the number of levels missed since their last point
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const auto& lv = levels[k];
        struct Pair {
            double cost;
            std::size_t arc, pt;
        };
        std::vector<Pair> pairs;
        if (k > 0) {
            for (const auto& [a, missed] : open) {
                const auto [pk, pi] = arcs[a].pts.back();
                const BranchPoint& p = levels[pk].points[pi];
                const auto vp = em(p);
                // secant slope from the last two points, when there are two
                std::array<double, 2> slope{0.0, 0.0};
                if (arcs[a].pts.size() >= 2) {
                    const auto [ok, oi] = arcs[a].pts[arcs[a].pts.size() - 2];
                    const BranchPoint& o = levels[ok].points[oi];
                    const auto vo = em(o);
                    if (p.mu != o.mu)
                        for (int c = 0; c < 2; ++c) slope[c] = (vp[c] - vo[c]) / (p.mu - o.mu);
                }
                for (std::size_t q = 0; q < lv.points.size(); ++q) {
                    const BranchPoint& r = lv.points[q];
                    // symmetric and asymmetric solutions only meet at pitchforks
                    if (em.symmetric(r) != em.symmetric(p)) continue;
                    const double dmu = (r.mu - p.mu) / range;
                    const auto vr = em(r);
                    const double d = std::hypot(dmu, em.dist(vr, vp));
                    if (d >= sc.match_tol) continue;
                    const std::array<double, 2> pred{vp[0] + slope[0] * (r.mu - p.mu), vp[1] + slope[1] * (r.mu - p.mu)};
                    const double dpred = std::hypot(dmu, em.dist(vr, pred));
                    const bool same_fp = r.band_l == p.band_l && r.band_r == p.band_r;
                    pairs.push_back({std::min(d, dpred) + (same_fp ? 0.0 : 1e-9), a, q});
                }
            }
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
            if (x.cost != y.cost) return x.cost < y.cost;
            return x.arc != y.arc ? x.arc < y.arc : x.pt < y.pt;
        });
        std::set<std::size_t> used_arc, used_pt;
        std::map<std::size_t, int> next_open;
        for (const auto& pr : pairs) {
            if (used_arc.count(pr.arc) || used_pt.count(pr.pt)) continue;
            used_arc.insert(pr.arc);
            used_pt.insert(pr.pt);
            arcs[pr.arc].pts.emplace_back(k, pr.pt);
            next_open[pr.arc] = 0;
        }
        for (std::size_t q = 0; q < lv.points.size(); ++q) {
            if (used_pt.count(q)) continue;
            arcs.push_back(Arc{{{k, q}}});
            next_open[arcs.size() - 1] = 0;
        }
        // a solution the solver missed at one level does not end the arc
        for (const auto& [a, missed] : open)
            if (!used_arc.count(a) && missed < sc.max_skip) next_open[a] = missed + 1;
        open = std::move(next_open);
    }
    return arcs;
}

inline double parabola_extremum(double v0, double m0, double v1, double m1, double v2, double m2) {
    // mu as a quadratic in v through three points
    const double d = (v0 - v1) * (v0 - v2) * (v1 - v2);
    if (d == 0.0) return m1;
    const double a = (v2 * (m1 - m0) + v1 * (m0 - m2) + v0 * (m2 - m1)) / d;
    const double b = (v2 * v2 * (m0 - m1) + v1 * v1 * (m2 - m0) + v0 * v0 * (m1 - m2)) / d;
    const double c = (v1 * v2 * (v1 - v2) * m0 + v2 * v0 * (v2 - v0) * m1 + v0 * v1 * (v0 - v1) * m2) / d;
    if (a == 0.0) return m1;
    return c - b * b / (4.0 * a);
}

} // namespace detail

struct ClassifyOptions {
    detail::Embed embed;
    bool symmetric_weight = false;
    double mu_grid_step = 0.0; ///< bounds the turning-point correction; 0 leaves it unbounded
    double trivial_tol = 1e-3;
    double match_tol = 0.05;
    double mu_range = 1.0;
    double range_lo = -std::numeric_limits<double>::infinity();
    double range_hi = std::numeric_limits<double>::infinity();
};

/// Turning points (local extrema of the parameter along the branch, with a
/// three-point parabola estimate), transcritical points (ends at a trivial
/// state), pitchfork candidates (interior ends lying on another branch) and
/// plain ends.
inline Branch classify_singular(Branch b, const std::vector<Branch>& others = {}, const ClassifyOptions& opt = {}) {
    b.tags.clear();
    const auto& P = b.points;
    const std::size_t n = P.size();
    if (n == 0) return b;
    const auto& em = opt.embed;
    const double mu_grid_step = opt.mu_grid_step;
    auto v = [&](std::size_t i) { return em.v(P[i]); };
    // turning points; a closed branch wraps around
    if (n >= 3) {
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && P[j + 1].mu == P[i].mu) ++j;
            const bool has_prev = i > 0 || b.closed;
            const bool has_next = j + 1 < n || b.closed;
            if (has_prev && has_next) {
                const std::size_t ip = i > 0 ? i - 1 : n - 1;
                const std::size_t jn = j + 1 < n ? j + 1 : 0;
                const double mp = P[ip].mu, mn = P[jn].mu, m = P[i].mu;
                const bool is_max = mp < m && mn < m;
                const bool is_min = mp > m && mn > m;
                if ((is_max || is_min) && !(b.closed && ip == jn)) {
                    const bool at_join = std::any_of(b.pitchfork_joins.begin(), b.pitchfork_joins.end(),
                                                     [&](std::size_t k) { return k >= i && k <= j + 1; });
                    double est = detail::parabola_extremum(v(ip), mp, v(i), m, v(jn), mn);
                    if (j != i) est = detail::parabola_extremum(v(ip), mp, 0.5 * (v(i) + v(j)), m, v(jn), mn);
                    if (mu_grid_step > 0.0) est = std::clamp(est, m - mu_grid_step, m + mu_grid_step);
                    if (is_max) est = std::max(est, m);
                    else est = std::min(est, m);
                    b.tags.push_back({est, 0.5 * (P[i].u0 + P[j].u0),
                                      at_join ? SingularKind::pitchfork_candidate : SingularKind::turning, i,
                                      at_join && opt.symmetric_weight});
                }
            }
            i = j + 1;
        }
    }
    if (!b.closed) {
        for (std::size_t e : {std::size_t{0}, n - 1}) {
            const BranchPoint& q = P[e];
            SingularTag t{q.mu, q.u0, SingularKind::endpoint, e, false};
            if (detail::near_trivial(q, em.bc, opt.trivial_tol)) {
                t.kind = SingularKind::transcritical;
            } else if (q.mu > opt.range_lo && q.mu < opt.range_hi) {
                for (const auto& o : others) {
                    if (o.id == b.id || o.trivial) continue;
                    for (std::size_t k = 1; k + 1 < o.points.size(); ++k) {
                        const double d =
                            std::hypot((o.points[k].mu - q.mu) / opt.mu_range, em.dist(em(o.points[k]), em(q)));
                        if (d < opt.match_tol) {
                            t.kind = SingularKind::pitchfork_candidate;
                            t.symmetric_weight = opt.symmetric_weight;
                        }
                    }
                }
            }
            b.tags.push_back(t);
            if (n == 1) break;
        }
    }
    std::sort(b.tags.begin(), b.tags.end(), [](const SingularTag& x, const SingularTag& y) { return x.index < y.index; });
    return b;
}

namespace detail {

inline std::vector<Branch> assemble_branches(const std::vector<SweepLevel>& levels, const SweepConfig& sc,
                                             const Embed& em, bool symmetric) {
    auto arcs = link_arcs(levels, sc, em);
    const std::size_t L = levels.size();
    auto pt = [&](const std::pair<std::size_t, std::size_t>& r) -> const BranchPoint& {
        return levels[r.first].points[r.second];
    };
    // fold joins: two free ends with the same orientation on the same or
    // neighbouring levels, away from the trivial states. A pair straddling a
    // continuing solution is a pitchfork: the arms are joined as well, and
    // the junction is recorded.
    struct End {
        std::size_t arc;
        bool at_end; // true: last point, false: first point
        std::size_t level;
    };
    std::vector<End> ends;
    for (std::size_t a = 0; a < arcs.size(); ++a) {
        const auto first = arcs[a].pts.front(), last = arcs[a].pts.back();
        if (first.first > 0) ends.push_back({a, false, first.first});
        if (last.first + 1 < L) ends.push_back({a, true, last.first});
    }
    auto end_ref = [&](const End& e) { return e.at_end ? arcs[e.arc].pts.back() : arcs[e.arc].pts.front(); };
    auto is_end_point = [&](std::size_t lvl, std::size_t idx) {
        return std::any_of(ends.begin(), ends.end(), [&](const End& e) {
            const auto r = end_ref(e);
            return r.first == lvl && r.second == idx;
        });
    };
    const double range = sc.max - sc.min;
    std::vector<std::array<long, 2>> link(arcs.size(), {-1, -1}); // partner arc per end (0: start, 1: end)
    std::vector<std::array<int, 2>> link_side(arcs.size(), {0, 0});
    std::vector<std::array<bool, 2>> link_pitchfork(arcs.size(), {false, false});
    struct Cand {
        double d;
        std::size_t i, j;
        bool pitchfork;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < ends.size(); ++i)
        for (std::size_t j = i + 1; j < ends.size(); ++j) {
            const auto& ea = ends[i];
            const auto& eb = ends[j];
            if (ea.at_end != eb.at_end || ea.arc == eb.arc) continue;
            if ((ea.level > eb.level ? ea.level - eb.level : eb.level - ea.level) > 1 + static_cast<std::size_t>(sc.max_skip))
                continue;
            const BranchPoint& qa = pt(end_ref(ea));
            const BranchPoint& qb = pt(end_ref(eb));
            if (near_trivial(qa, sc.bc, sc.trivial_tol) || near_trivial(qb, sc.bc, sc.trivial_tol)) continue;
            if (em.symmetric(qa) != em.symmetric(qb)) continue;
            const auto va = em(qa), vb = em(qb);
            const double sep = em.dist(va, vb);
            const double d = std::hypot((qa.mu - qb.mu) / range, sep);
            if (d >= sc.match_tol) continue;
            const std::array<double, 2> mid{0.5 * (va[0] + vb[0]), 0.5 * (va[1] + vb[1])};
            bool straddle = false;
            for (std::size_t lvl : {ea.level, eb.level})
                for (std::size_t k = 0; k < levels[lvl].points.size(); ++k)
                    if (!is_end_point(lvl, k) && em.dist(em(levels[lvl].points[k]), mid) < 0.5 * sep) straddle = true;
            cands.push_back({d, i, j, straddle});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        return x.d != y.d ? x.d < y.d : (x.i != y.i ? x.i < y.i : x.j < y.j);
    });
    std::set<std::size_t> used;
    for (const auto& c : cands) {
        if (used.count(c.i) || used.count(c.j)) continue;
        used.insert(c.i);
        used.insert(c.j);
        const auto& ea = ends[c.i];
        const auto& eb = ends[c.j];
        link[ea.arc][ea.at_end ? 1 : 0] = static_cast<long>(eb.arc);
        link_side[ea.arc][ea.at_end ? 1 : 0] = eb.at_end ? 1 : 0;
        link_pitchfork[ea.arc][ea.at_end ? 1 : 0] = c.pitchfork;
        link[eb.arc][eb.at_end ? 1 : 0] = static_cast<long>(ea.arc);
        link_side[eb.arc][eb.at_end ? 1 : 0] = ea.at_end ? 1 : 0;
        link_pitchfork[eb.arc][eb.at_end ? 1 : 0] = c.pitchfork;
    }
    // walk the chains
    std::vector<Branch> out;
    std::vector<bool> seen(arcs.size(), false);
    auto walk = [&](std::size_t start, int entry_side, Branch& br) {
        // entry_side: the end through which we enter the arc (0 start, 1 end)
        std::size_t a = start;
        int side = entry_side;
        for (;;) {
            seen[a] = true;
            auto pts = arcs[a].pts;
            if (side == 1) std::reverse(pts.begin(), pts.end());
            for (const auto& r : pts) br.points.push_back(pt(r));
            const int exit_side = 1 - side;
            const long nb = link[a][exit_side];
            if (nb < 0) return false;
            if (link_pitchfork[a][exit_side])
                br.pitchfork_joins.push_back(static_cast<std::size_t>(nb) == start ? 0 : br.points.size());
            if (seen[static_cast<std::size_t>(nb)]) return static_cast<std::size_t>(nb) == start;
            side = link_side[a][exit_side];
            a = static_cast<std::size_t>(nb);
        }
    };
    // open chains first: start at arcs with a free end
    for (std::size_t a = 0; a < arcs.size(); ++a) {
        if (seen[a]) continue;
        for (int s = 0; s < 2; ++s) {
            if (link[a][s] >= 0) continue;
            Branch br;
            walk(a, s, br);
            out.push_back(std::move(br));
            break;
        }
    }
    for (std::size_t a = 0; a < arcs.size(); ++a) {
        if (seen[a]) continue;
        Branch br;
        br.closed = walk(a, 0, br);
        out.push_back(std::move(br));
    }
    // closed chains start where the parameter changes, away from junctions,
    // so that no plateau wraps around
    for (auto& br : out) {
        if (!br.closed) continue;
        const std::size_t n = br.points.size();
        auto is_join = [&](std::size_t k) {
            return std::find(br.pitchfork_joins.begin(), br.pitchfork_joins.end(), k) != br.pitchfork_joins.end();
        };
        std::size_t r = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (br.points[k].mu != br.points[k - 1].mu && !is_join(k)) {
                r = k;
                break;
            }
        if (r == 0) continue;
        std::rotate(br.points.begin(), br.points.begin() + static_cast<std::ptrdiff_t>(r), br.points.end());
        for (auto& k : br.pitchfork_joins) k = (k + n - r) % n;
    }
    // closing check on value: first and last points within tolerance
    for (auto& br : out) {
        if (br.closed || br.points.size() < 3) continue;
        const auto& f = br.points.front();
        const auto& l = br.points.back();
        if (std::hypot((f.mu - l.mu) / range, em.dist(em(f), em(l))) < 1e-12) br.closed = true;
    }
    std::sort(out.begin(), out.end(), [&](const Branch& x, const Branch& y) {
        if (x.points.front().mu != y.points.front().mu) return x.points.front().mu < y.points.front().mu;
        return em.v(x.points.front()) < em.v(y.points.front());
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].id = i;
        out[i].fragile = out[i].points.size() < 2;
    }
    std::vector<Branch> tagged;
    ClassifyOptions opt;
    opt.embed = em;
    opt.symmetric_weight = symmetric;
    opt.mu_grid_step = (sc.max - sc.min) / static_cast<double>(sc.n_steps - 1);
    opt.trivial_tol = sc.trivial_tol;
    opt.match_tol = sc.match_tol;
    opt.mu_range = range;
    opt.range_lo = sc.min;
    opt.range_hi = sc.max;
    for (const auto& br : out) tagged.push_back(classify_singular(br, out, opt));
    return tagged;
}

} // namespace detail

/// Solves at every grid value, refines around dangling branch ends by
/// bisection in the parameter, and links the solutions into branches.
inline SweepResult sweep(const WeightSpec& w, const Nonlinearity& g, const SweepConfig& sc) {
    sc.validate();
    SweepResult res;
    res.config = sc;
    if (1.0 / static_cast<double>(sc.n_steps - 1) >= sc.match_tol)
        res.log.push_back("grid step is not below match_tol of the range; consecutive levels cannot be linked");
    const double lambda_for_cap = sc.parameter == SweepParameter::mu ? sc.fixed : sc.max;
    detail::Embed em;
    em.bc = sc.bc;
    if (sc.bc.left == BcSide::value_zero) em.ycap_left = default_y_cap(w, g, lambda_for_cap, true);
    if (sc.bc.right == BcSide::value_zero) em.ycap_right = default_y_cap(w, g, lambda_for_cap, false);
    em.mirror = w.is_even() && sc.bc.left == sc.bc.right;
    em.symmetry_tol = sc.symmetry_tol;
    const bool symmetric = w.is_even();

    std::vector<double> grid;
    for (std::size_t i = 0; i < sc.n_steps; ++i)
        grid.push_back(sc.min + (sc.max - sc.min) * static_cast<double>(i) / static_cast<double>(sc.n_steps - 1));
    grid.back() = sc.max;

    auto solve_all = [&](const std::vector<double>& vals) {
        std::vector<SweepLevel> lv(vals.size());
        // one level per worker; the solver itself then runs single-threaded
        SweepConfig inner = sc;
        inner.solver.shoot.threads = 1;
        parallel_for(vals.size(), [&](std::size_t i) {
            lv[i] = detail::solve_level(w, g, inner, vals[i]);
            detail::cluster_level(lv[i], em, sc.cluster_tol, sc.trivial_tol, sc.duplicate_tol);
        });
        return lv;
    };
    res.levels = solve_all(grid);
    auto sort_levels = [&] {
        std::sort(res.levels.begin(), res.levels.end(), [](const SweepLevel& a, const SweepLevel& b) { return a.mu < b.mu; });
    };
    sort_levels();

    for (int round = 0; round < sc.refine_rounds; ++round) {
        const auto arcs = detail::link_arcs(res.levels, sc, em);
        std::set<double> extra;
        for (const auto& a : arcs) {
            const std::size_t f = a.pts.front().first, l = a.pts.back().first;
            if (f > 0) extra.insert(0.5 * (res.levels[f - 1].mu + res.levels[f].mu));
            if (l + 1 < res.levels.size()) extra.insert(0.5 * (res.levels[l].mu + res.levels[l + 1].mu));
        }
        if (extra.empty()) break;
        auto fresh = solve_all(std::vector<double>(extra.begin(), extra.end()));
        for (auto& lv : fresh) res.levels.push_back(std::move(lv));
        sort_levels();
    }
    res.branches = detail::assemble_branches(res.levels, sc, em, symmetric);
    if (sc.tag_refine_points > 0) {
        const double h = (sc.max - sc.min) / static_cast<double>(sc.n_steps - 1);
        std::set<double> have;
        for (const auto& lv : res.levels) have.insert(lv.mu);
        std::set<double> extra;
        for (const auto& b : res.branches)
            for (const auto& t : b.tags) {
                if (t.kind == SingularKind::endpoint) continue;
                const int k = sc.tag_refine_points;
                for (int i = 1; i <= k; ++i) {
                    // offsets +-h/(k/2+1) ... spread symmetrically inside one grid step
                    const double off = h * static_cast<double>((i + 1) / 2) / static_cast<double>(k / 2 + 1);
                    const double m = t.mu + (i % 2 ? -off : off);
                    if (m < sc.min || m > sc.max || have.count(m)) continue;
                    extra.insert(m);
                }
            }
        auto fresh = solve_all(std::vector<double>(extra.begin(), extra.end()));
        for (auto& lv : fresh) res.levels.push_back(std::move(lv));
        sort_levels();
    }
    for (const auto& lv : res.levels)
        if (lv.failed) res.log.push_back("solver failure at " + std::to_string(lv.mu) + ": " + lv.error);

    res.branches = detail::assemble_branches(res.levels, sc, em, symmetric);
    for (const auto& b : res.branches)
        if (b.fragile) res.log.push_back("fragile branch " + std::to_string(b.id) + " (single point)");

    // trivial reference rows
    const bool neumann_like = sc.bc.left == BcSide::slope_zero && sc.bc.right == BcSide::slope_zero;
    for (double u : neumann_like ? std::vector<double>{0.0, 1.0} : std::vector<double>{0.0}) {
        Branch t;
        t.id = res.branches.size();
        t.trivial = true;
        t.points = {{sc.min, u, 0.0, u, 0.0, -1, -1, u, u}, {sc.max, u, 0.0, u, 0.0, -1, -1, u, u}};
        res.branches.push_back(std::move(t));
    }
    return res;
}

struct ExistenceWindow {
    double m0 = 0.0;
    double m1 = 0.0;
    bool truncated_low = false;
    bool truncated_high = false;
};

/// Smallest and largest parameter value carrying a nontrivial solution.
inline std::optional<ExistenceWindow> detect_existence_window(const std::vector<Branch>& branches,
                                                              std::pair<double, double> sweep_range) {
    std::optional<ExistenceWindow> w;
    for (const auto& b : branches) {
        if (b.trivial) continue;
        for (const auto& p : b.points) {
            if (!w) w = ExistenceWindow{p.mu, p.mu, false, false};
            w->m0 = std::min(w->m0, p.mu);
            w->m1 = std::max(w->m1, p.mu);
        }
    }
    if (w) {
        w->truncated_low = w->m0 <= sweep_range.first;
        w->truncated_high = w->m1 >= sweep_range.second;
    }
    return w;
}

inline std::optional<ExistenceWindow> detect_existence_window(const SweepResult& r) {
    return detect_existence_window(r.branches, {r.config.min, r.config.max});
}

/// Number of solutions per level.
inline std::vector<std::pair<double, std::size_t>> solution_counts(const SweepResult& r) {
    std::vector<std::pair<double, std::size_t>> out;
    for (const auto& lv : r.levels) out.emplace_back(lv.mu, lv.points.size());
    return out;
}

struct ConjectureReport {
    std::size_t humps = 0;
    std::size_t expected = 0; ///< 3^m - 1
    std::vector<double> kappas;
    std::vector<std::size_t> counts; ///< per section time
    std::vector<BvpSolution> solutions; ///< at the first section
    std::vector<std::pair<int, int>> fingerprints;
};

/// Solution count for a multi-hump weight with the section in the last
/// negativity interval (or the given sections). Exploratory: nothing is
/// asserted about the count.
inline ConjectureReport conjecture_scan(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p,
                                        const BoundaryConditionType& bc, std::vector<double> kappa_list = {},
                                        const SolverConfig& cfg = {}) {
    const auto& nodes = w.nodes();
    if (nodes.size() % 2 != 0) throw AdmissibilityError("weight must alternate positive and negative humps");
    ConjectureReport rep;
    rep.humps = w.humps();
    rep.expected = 1;
    for (std::size_t i = 0; i < rep.humps; ++i) rep.expected *= 3;
    rep.expected -= 1;
    if (kappa_list.empty()) {
        const auto neg = w.negativity_intervals();
        kappa_list.push_back(neg.empty() ? 0.5 * w.T() : 0.5 * (neg.back().first + neg.back().second));
    }
    rep.kappas = kappa_list;
    SolverConfig c = cfg;
    c.second_kappa = false;
    for (std::size_t i = 0; i < kappa_list.size(); ++i) {
        auto sols = solve_multiplicity(w, g, p, bc, kappa_list[i], c);
        rep.counts.push_back(sols.size());
        if (i == 0) {
            for (const auto& s : sols) rep.fingerprints.emplace_back(s.band_index_left, s.band_index_right);
            rep.solutions = std::move(sols);
        }
    }
    return rep;
}

struct WindowScanRow {
    double lambda = 0.0;
    std::optional<ExistenceWindow> window;
};

/// lambda grid x mu grid: the existence window per lambda (empty when no
/// nontrivial solution is found). Reports only; asserts nothing.
inline std::vector<WindowScanRow> window_scan(const WeightSpec& w, const Nonlinearity& g,
                                              const std::vector<double>& lambdas, SweepConfig sc) {
    std::vector<WindowScanRow> rows;
    sc.parameter = SweepParameter::mu;
    sc.refine_rounds = 0;
    for (double lam : lambdas) {
        sc.fixed = lam;
        const auto r = sweep(w, g, sc);
        rows.push_back({lam, detect_existence_window(r)});
    }
    return rows;
}

struct IsolaScanRow {
    double lambda = 0.0;
    std::size_t closed = 0;    ///< closed branches found
    std::size_t nontrivial = 0;
};

/// Closed-branch count per lambda. The first sampled lambda after a closed
/// branch at which none is found marks where the isola stops closing.
inline std::vector<IsolaScanRow> isola_scan(const WeightSpec& w, const Nonlinearity& g,
                                            const std::vector<double>& lambdas, SweepConfig sc) {
    std::vector<IsolaScanRow> rows;
    sc.parameter = SweepParameter::mu;
    for (double lam : lambdas) {
        sc.fixed = lam;
        const auto r = sweep(w, g, sc);
        IsolaScanRow row{lam, 0, 0};
        for (const auto* b : r.nontrivial()) {
            ++row.nontrivial;
            if (b->closed) ++row.closed;
        }
        rows.push_back(row);
    }
    return rows;
}

inline std::optional<double> isola_break_lambda(const std::vector<IsolaScanRow>& rows) {
    bool seen = false;
    for (const auto& r : rows) {
        if (r.closed > 0) seen = true;
        else if (seen) return r.lambda;
    }
    return std::nullopt;
}

/// CSV with header branch_id,mu,u0,du0,band_l,band_r,tag; the tag column
/// carries the singular kind on tagged points.
inline void write_branches_csv(std::ostream& os, const SweepResult& r, std::string_view provenance = {}) {
    if (!provenance.empty()) os << "# " << provenance << '\n';
    os << "branch_id," << (r.config.parameter == SweepParameter::mu ? "mu" : "lambda") << ",u0,du0,band_l,band_r,tag\n";
    char buf[160];
    for (const auto& b : r.branches) {
        for (std::size_t i = 0; i < b.points.size(); ++i) {
            const auto& p = b.points[i];
            std::string tag = b.trivial ? "trivial" : "";
            for (const auto& t : b.tags)
                if (t.index == i) tag += (tag.empty() ? "" : "|") + std::string(to_string(t.kind));
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%d,%d,", b.id, p.mu, p.u0, p.du0, p.band_l, p.band_r);
            os << buf << tag << '\n';
        }
    }
}

} // namespace indefshoot
