#pragma once

// Positive solutions as intersections of a forward and a backward
// continuum at the section kappa, refined and re-integrated on [0,T].

#include "indefshoot/phaseplane.hpp"

#include <array>
#include <cstdio>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace indefshoot {

enum class BcSide { value_zero, slope_zero };

struct BoundaryConditionType {
    BcSide left = BcSide::slope_zero;
    BcSide right = BcSide::slope_zero;

    static BoundaryConditionType dirichlet() { return {BcSide::value_zero, BcSide::value_zero}; }
    static BoundaryConditionType neumann() { return {BcSide::slope_zero, BcSide::slope_zero}; }
    /// u(0) = 0, u'(T) = 0
    static BoundaryConditionType dirichlet_neumann() { return {BcSide::value_zero, BcSide::slope_zero}; }
    /// u'(0) = 0, u(T) = 0
    static BoundaryConditionType neumann_dirichlet() { return {BcSide::slope_zero, BcSide::value_zero}; }

    friend bool operator==(const BoundaryConditionType&, const BoundaryConditionType&) = default;

    std::string name() const {
        if (left == right) return left == BcSide::value_zero ? "dirichlet" : "neumann";
        return left == BcSide::value_zero ? "dirichlet_neumann" : "neumann_dirichlet";
    }

    static BoundaryConditionType parse(const std::string& s) {
        if (s == "dirichlet" || s == "dd") return dirichlet();
        if (s == "neumann" || s == "nn") return neumann();
        if (s == "dirichlet_neumann" || s == "dn" || s == "mixed_dn") return dirichlet_neumann();
        if (s == "neumann_dirichlet" || s == "nd" || s == "mixed_nd") return neumann_dirichlet();
        throw ParameterError("unknown boundary condition '" + s
                             + "' (expected dirichlet, neumann, dirichlet_neumann or neumann_dirichlet)");
    }

    InitialSet forward_set(const WeightSpec& w, const Nonlinearity& g, double lambda) const {
        return left == BcSide::value_zero ? InitialSet::y_ge0(default_y_cap(w, g, lambda, true)) : InitialSet::x01(0.0);
    }
    InitialSet backward_set(const WeightSpec& w, const Nonlinearity& g, double lambda) const {
        return right == BcSide::value_zero ? InitialSet::y_le0(w.T(), default_y_cap(w, g, lambda, false))
                                           : InitialSet::x01(w.T());
    }
};

struct ResidualReport {
    double equation = 0.0;        ///< max |y' - field| on the grid
    double equation_scaled = 0.0; ///< max |y' - field| / max(1, |field|)
    double bc_left = 0.0;
    double bc_right = 0.0;
    double u_min = 0.0; ///< over the open interval
    double u_max = 0.0;

    double equation_tol = 1e-6;
    double bc_tol = 1e-8;
    double trivial_eps = 1e-6;

    bool equation_ok() const { return equation_scaled < equation_tol; }
    bool bc_ok() const { return bc_left < bc_tol && bc_right < bc_tol; }
    bool positive() const { return u_min > 0.0 && u_max < 1.0; }
    bool nontrivial() const { return u_max >= trivial_eps && u_min <= 1.0 - trivial_eps; }
    bool ok() const { return equation_ok() && bc_ok() && positive() && nontrivial(); }

    std::string failure() const {
        if (!nontrivial()) return "trivial (u within 1e-6 of 0 or 1)";
        if (!positive()) return "u leaves ]0,1[";
        char buf[96];
        if (!bc_ok()) {
            std::snprintf(buf, sizeof buf, "boundary residual above tolerance (%.3g, %.3g)", bc_left, bc_right);
            return buf;
        }
        if (!equation_ok()) {
            std::snprintf(buf, sizeof buf, "equation residual above tolerance (%.3g)", equation_scaled);
            return buf;
        }
        return {};
    }
};

struct BvpSolution {
    BoundaryConditionType bc;
    ParameterPair p;
    double kappa = 0.0;
    PhasePoint section_point;
    double left_param = 0.0;
    double right_param = 0.0;
    Trajectory trajectory;
    ResidualReport residuals;
    double kappa_gap = 0.0; ///< |forward image - backward image| after refinement
    int band_index_left = -1;
    int band_index_right = -1;
    bool refined = true;

    double u0() const { return trajectory.front().x; }
    double du0() const { return trajectory.front().y; }
    double uT() const { return trajectory.back().x; }
    double duT() const { return trajectory.back().y; }
};

struct RawIntersection {
    double s_left = 0.0;
    double s_right = 0.0;
    PhasePoint point;
    double residual = 0.0;
    bool refined = false;
    std::size_t band_left = 0; ///< band index in the section continuum
    std::size_t band_right = 0;
};

struct SolverConfig {
    ShootConfig shoot;
    IntegratorConfig refine_integrator{1e-12, 1e-14, std::numeric_limits<double>::infinity(), 1e-12};
    double refine_tol = 1e-10;
    int max_iter = 100;
    double dedup_tol = 1e-8;
    double fd_step = 1e-7;
    bool second_kappa = true;
    double trivial_eps = 1e-6;
    std::size_t residual_grid = 1000;
    double fd_h = 1e-5;
    double merge_tol = 1e-7; ///< same solution when u and u' agree to this at both ends
    bool allow_zero_mu = false;
};

struct SolveDiagnostics {
    std::vector<double> kappas;
    std::vector<std::size_t> counts_per_kappa;
    bool kappa_discrepancy = false;
    bool duplicate_fingerprint = false;
    std::vector<std::string> rejected; ///< one line per discarded candidate
    std::vector<std::string> warnings;
    std::size_t raw_candidates = 0;
    std::array<std::size_t, 2> bands_at_section{0, 0};
    std::array<std::size_t, 2> bands_for_fingerprint{0, 0};
};

namespace detail {

struct Poly {
    std::vector<double> s;
    std::vector<PhasePoint> q;
    std::size_t band = 0;
    double s_lo = 0.0, s_hi = 0.0;
};

inline std::vector<Poly> band_polylines(const Continuum& c, const CrossingStructure& cs) {
    std::vector<Poly> out;
    for (std::size_t b = 0; b < cs.interior_bands.size(); ++b) {
        const Band& band = cs.interior_bands[b];
        Poly pl;
        pl.band = b;
        pl.s_lo = std::min(band.s_lo, band.s_hi);
        pl.s_hi = std::max(band.s_lo, band.s_hi);
        for (std::size_t i = band.first; i <= band.last; ++i) {
            if (c.samples[i].equilibrium) continue;
            pl.s.push_back(c.samples[i].s);
            pl.q.push_back(c.samples[i].image);
        }
        if (pl.s.size() >= 2) out.push_back(std::move(pl));
    }
    return out;
}

struct Box {
    double x0, x1, y0, y1;
    bool overlaps(const Box& o) const { return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1; }
};

inline Box box_of(const std::vector<PhasePoint>& q, std::size_t i0, std::size_t i1) {
    Box b{q[i0].x, q[i0].x, q[i0].y, q[i0].y};
    for (std::size_t i = i0 + 1; i <= i1; ++i) {
        b.x0 = std::min(b.x0, q[i].x);
        b.x1 = std::max(b.x1, q[i].x);
        b.y0 = std::min(b.y0, q[i].y);
        b.y1 = std::max(b.y1, q[i].y);
    }
    return b;
}

// Intersection of [p0,p1] and [q0,q1]; returns the fractions along each.
inline std::optional<std::pair<double, double>> segment_hit(const PhasePoint& p0, const PhasePoint& p1,
                                                            const PhasePoint& q0, const PhasePoint& q1) {
    const double rx = p1.x - p0.x, ry = p1.y - p0.y;
    const double sx = q1.x - q0.x, sy = q1.y - q0.y;
    const double den = rx * sy - ry * sx;
    if (den == 0.0) return std::nullopt;
    const double qx = q0.x - p0.x, qy = q0.y - p0.y;
    const double t = (qx * sy - qy * sx) / den;
    const double u = (qx * ry - qy * rx) / den;
    constexpr double eps = 1e-12;
    if (t < -eps || t > 1.0 + eps || u < -eps || u > 1.0 + eps) return std::nullopt;
    return std::make_pair(std::clamp(t, 0.0, 1.0), std::clamp(u, 0.0, 1.0));
}

// Damped Broyden iteration on F(a,b) = Phi_f(a) - Phi_b(b), started from a
// chord Jacobian; finite-difference Jacobian when a step fails to reduce |F|.
inline RawIntersection refine_intersection(const Continuum& cf, const Continuum& cb, double a, double b,
                                           std::array<double, 4> J, std::pair<double, double> ra,
                                           std::pair<double, double> rb, const SolverConfig& cfg) {
    const auto& icfg = cfg.refine_integrator;
    auto eval = [&](double sa, double sb, PhasePoint& pf) {
        pf = cf.map(sa, icfg);
        const PhasePoint pb = cb.map(sb, icfg);
        return std::array<double, 2>{pf.x - pb.x, pf.y - pb.y};
    };
    auto norm = [](const std::array<double, 2>& f) { return std::max(std::abs(f[0]), std::abs(f[1])); };
    auto fd_jacobian = [&](double sa, double sb, const std::array<double, 2>& F0) {
        PhasePoint tmp;
        const double ha = (sa + cfg.fd_step <= ra.second) ? cfg.fd_step : -cfg.fd_step;
        const double hb = (sb + cfg.fd_step <= rb.second) ? cfg.fd_step : -cfg.fd_step;
        const auto Fa = eval(sa + ha, sb, tmp);
        const auto Fb = eval(sa, sb + hb, tmp);
        return std::array<double, 4>{(Fa[0] - F0[0]) / ha, (Fb[0] - F0[0]) / hb, (Fa[1] - F0[1]) / ha,
                                     (Fb[1] - F0[1]) / hb};
    };

    RawIntersection out;
    PhasePoint pf;
    auto F = eval(a, b, pf);
    double nF = norm(F);
    bool fresh_fd = false;
    // absolute below |P| = 1, relative above
    auto tol = [&] { return cfg.refine_tol * std::max({1.0, std::abs(pf.x), std::abs(pf.y)}); };
    for (int it = 0; it < cfg.max_iter && nF >= tol(); ++it) {
        const double det = J[0] * J[3] - J[1] * J[2];
        bool accepted = false;
        if (det != 0.0 && std::isfinite(det)) {
            const double da = -(J[3] * F[0] - J[1] * F[1]) / det;
            const double db = -(-J[2] * F[0] + J[0] * F[1]) / det;
            double damp = 1.0;
            for (int k = 0; k < 12 && !accepted; ++k, damp *= 0.5) {
                const double na = std::clamp(a + damp * da, ra.first, ra.second);
                const double nb = std::clamp(b + damp * db, rb.first, rb.second);
                PhasePoint pf2;
                const auto F2 = eval(na, nb, pf2);
                const double n2 = norm(F2);
                if (n2 < nF) {
                    // Broyden update with the realized step
                    const double sa = na - a, sb = nb - b;
                    const double ss = sa * sa + sb * sb;
                    if (ss > 0.0) {
                        const double r0 = (F2[0] - F[0]) - (J[0] * sa + J[1] * sb);
                        const double r1 = (F2[1] - F[1]) - (J[2] * sa + J[3] * sb);
                        J = {J[0] + r0 * sa / ss, J[1] + r0 * sb / ss, J[2] + r1 * sa / ss, J[3] + r1 * sb / ss};
                    }
                    a = na;
                    b = nb;
                    F = F2;
                    nF = n2;
                    pf = pf2;
                    accepted = true;
                }
            }
        }
        if (accepted) {
            fresh_fd = false;
            continue;
        }
        if (fresh_fd) break; // even the finite-difference Jacobian stalls
        J = fd_jacobian(a, b, F);
        fresh_fd = true;
    }
    out.s_left = a;
    out.s_right = b;
    out.point = pf;
    out.residual = nF;
    out.refined = nF < tol();
    return out;
}

} // namespace detail

/// All crossings between the interior-band polylines of a forward and a
/// backward continuum, refined to |Phi_f - Phi_b| < refine_tol.
inline std::vector<RawIntersection> intersect_continua(const Continuum& cf, const Continuum& cb,
                                                       const SolverConfig& cfg = {}) {
    if (cf.section_time != cb.section_time) throw ParameterError("continua must share the section time");
    if (!cf.forward() || cb.forward()) throw ParameterError("expected a forward and a backward continuum");
    const auto sf = detect_crossings(cf), sb = detect_crossings(cb);
    const auto pf = detail::band_polylines(cf, sf), pb = detail::band_polylines(cb, sb);

    struct Candidate {
        std::size_t lf, lb;
        double a, b;
        std::array<double, 4> J;
    };
    std::vector<Candidate> cands;
    constexpr std::size_t chunk = 32;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        const auto& A = pf[i];
        for (std::size_t j = 0; j < pb.size(); ++j) {
            const auto& B = pb[j];
            const detail::Box ba = detail::box_of(A.q, 0, A.q.size() - 1), bb = detail::box_of(B.q, 0, B.q.size() - 1);
            if (!ba.overlaps(bb)) continue;
            std::vector<detail::Box> boxes_b;
            for (std::size_t c0 = 0; c0 + 1 < B.q.size(); c0 += chunk)
                boxes_b.push_back(detail::box_of(B.q, c0, std::min(c0 + chunk, B.q.size() - 1)));
            for (std::size_t a0 = 0; a0 + 1 < A.q.size(); a0 += chunk) {
                const std::size_t a1 = std::min(a0 + chunk, A.q.size() - 1);
                const auto boxa = detail::box_of(A.q, a0, a1);
                for (std::size_t cb_i = 0; cb_i < boxes_b.size(); ++cb_i) {
                    if (!boxa.overlaps(boxes_b[cb_i])) continue;
                    const std::size_t b0 = cb_i * chunk, b1 = std::min(b0 + chunk, B.q.size() - 1);
                    for (std::size_t u = a0; u < a1; ++u)
                        for (std::size_t v = b0; v < b1; ++v) {
                            const auto hit = detail::segment_hit(A.q[u], A.q[u + 1], B.q[v], B.q[v + 1]);
                            if (!hit) continue;
                            const double ds_a = A.s[u + 1] - A.s[u], ds_b = B.s[v + 1] - B.s[v];
                            Candidate c;
                            c.lf = i;
                            c.lb = j;
                            c.a = A.s[u] + hit->first * ds_a;
                            c.b = B.s[v] + hit->second * ds_b;
                            c.J = {(A.q[u + 1].x - A.q[u].x) / ds_a, -(B.q[v + 1].x - B.q[v].x) / ds_b,
                                   (A.q[u + 1].y - A.q[u].y) / ds_a, -(B.q[v + 1].y - B.q[v].y) / ds_b};
                            cands.push_back(c);
                        }
                }
            }
        }
    }
    // hits at shared polyline vertices show up twice
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        return x.a != y.a ? x.a < y.a : x.b < y.b;
    });
    cands.erase(std::unique(cands.begin(), cands.end(),
                            [](const Candidate& x, const Candidate& y) {
                                return std::abs(x.a - y.a) < 1e-14 && std::abs(x.b - y.b) < 1e-14;
                            }),
                cands.end());

    std::vector<RawIntersection> raw(cands.size());
    parallel_for(
        cands.size(),
        [&](std::size_t k) {
            const auto& c = cands[k];
            const auto& A = pf[c.lf];
            const auto& B = pb[c.lb];
            // allow the iteration to run up to the break points
            const std::pair<double, double> ra{std::max(cf.set.s_min(), A.s_lo - 1e-9),
                                               std::min(cf.set.s_max(), A.s_hi + 1e-9)};
            const std::pair<double, double> rb{std::max(cb.set.s_min(), B.s_lo - 1e-9),
                                               std::min(cb.set.s_max(), B.s_hi + 1e-9)};
            raw[k] = detail::refine_intersection(cf, cb, c.a, c.b, c.J, ra, rb, cfg);
            raw[k].band_left = A.band;
            raw[k].band_right = B.band;
        },
        cfg.shoot.threads);

    std::sort(raw.begin(), raw.end(), [](const RawIntersection& x, const RawIntersection& y) {
        if (x.refined != y.refined) return x.refined;
        return x.residual < y.residual;
    });
    std::vector<RawIntersection> out;
    for (const auto& r : raw) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const RawIntersection& o) {
            return std::abs(o.s_left - r.s_left) < cfg.dedup_tol && std::abs(o.s_right - r.s_right) < cfg.dedup_tol;
        });
        if (!dup) out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const RawIntersection& x, const RawIntersection& y) {
        return x.s_left != y.s_left ? x.s_left < y.s_left : x.s_right < y.s_right;
    });
    return out;
}

/// Residuals of a trajectory as a solution of the boundary value problem.
inline ResidualReport verify_solution(const BvpSolution& sol, const WeightSpec& w, const Nonlinearity& g,
                                      std::size_t grid = 1000, double h = 1e-5) {
    const Trajectory& tr = sol.trajectory;
    const double T = w.T();
    if (std::abs(tr.t_min()) > 1e-12 || std::abs(tr.t_max() - T) > 1e-12)
        throw DomainError("verify_solution: trajectory must span [0,T]");
    if (grid < 3) throw ParameterError("residual grid needs at least 3 points");
    ResidualReport rep;
    const PhasePoint a = tr(0.0), b = tr(T);
    rep.bc_left = sol.bc.left == BcSide::value_zero ? std::abs(a.x) : std::abs(a.y);
    rep.bc_right = sol.bc.right == BcSide::value_zero ? std::abs(b.x) : std::abs(b.y);

    const auto& nodes = w.nodes();
    rep.u_min = std::numeric_limits<double>::infinity();
    rep.u_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(grid - 1);
        const PhasePoint q = tr(t);
        if (i > 0 && i + 1 < grid) {
            rep.u_min = std::min(rep.u_min, q.x);
            rep.u_max = std::max(rep.u_max, q.x);
        }
        // stencil side: stay within one smooth segment of the weight
        int side = 0; // 0 centered, +1 forward, -1 backward
        double t_node = -1.0;
        for (double n : nodes)
            if (std::abs(n - t) < 4.0 * h) t_node = n;
        if (t - 2.0 * h < 0.0) side = 1;
        else if (t + 2.0 * h > T) side = -1;
        else if (t_node >= 0.0) side = t >= t_node ? 1 : -1;
        double dy;
        if (side == 0)
            dy = (8.0 * (tr(t + h).y - tr(t - h).y) - (tr(t + 2.0 * h).y - tr(t - 2.0 * h).y)) / (12.0 * h);
        else
            dy = side
                 * (-25.0 * q.y + 48.0 * tr(t + side * h).y - 36.0 * tr(t + 2.0 * side * h).y
                    + 16.0 * tr(t + 3.0 * side * h).y - 3.0 * tr(t + 4.0 * side * h).y)
                 / (12.0 * h);
        std::size_t seg = w.segment_index(t);
        if (side < 0 && t_node >= 0.0 && t >= t_node && seg > 0) --seg;
        if (side > 0 && t_node >= 0.0 && t < t_node) ++seg;
        seg = std::min(seg, w.segments().size() - 1);
        const double aw = w.eval_in_segment(seg, t);
        const bool pos_seg = w.segments()[seg].sign == HumpSign::positive;
        const double W = pos_seg ? sol.p.lambda * std::max(aw, 0.0) : -sol.p.mu * std::max(-aw, 0.0);
        const double field = -W * g(q.x);
        rep.equation = std::max(rep.equation, std::abs(dy - field));
        rep.equation_scaled = std::max(rep.equation_scaled, std::abs(dy - field) / std::max(1.0, std::abs(field)));
    }
    for (std::size_t i = 0; i < tr.states().size(); ++i) {
        const double t = tr.t_grid()[i];
        if (t <= 0.0 || t >= T) continue;
        rep.u_min = std::min(rep.u_min, tr.states()[i].x);
        rep.u_max = std::max(rep.u_max, tr.states()[i].x);
    }
    return rep;
}

namespace detail {

// Section used for fingerprints and the negativity interval containing kappa.
struct SectionPlan {
    double kappa;
    double sigma_k; // start of the negativity interval (kappa itself for m = 1)
    double tau_k;
    std::optional<double> kappa2;
};

inline double default_kappa(const WeightSpec& w) {
    const auto neg = w.negativity_intervals();
    if (neg.empty()) return 0.5 * w.T();
    return 0.5 * (neg.front().first + neg.front().second);
}

inline SectionPlan plan_sections(const WeightSpec& w, double kappa, bool second) {
    SectionPlan sp{kappa, kappa, kappa, std::nullopt};
    check_section(w, kappa);
    for (const auto& [a, b] : w.negativity_intervals()) {
        if (kappa >= a && kappa <= b) {
            sp.sigma_k = a;
            sp.tau_k = b;
            if (second) {
                const double k2 = a + 0.25 * (b - a);
                if (k2 != kappa) sp.kappa2 = k2;
            }
            break;
        }
    }
    return sp;
}

inline double right_bc_value(const BoundaryConditionType& bc, const PhasePoint& end) {
    return bc.right == BcSide::value_zero ? end.x : end.y;
}

// Secant on the left parameter to push the right boundary residual of a
// single shot below tolerance.
inline double polish_left(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p,
                          const BoundaryConditionType& bc, const InitialSet& fset, double s0,
                          const SolverConfig& cfg, double target) {
    auto r = [&](double s) { return right_bc_value(bc, poincare_map(w, g, p, 0.0, w.T(), fset.point(s), cfg.refine_integrator)); };
    double x0 = s0, f0 = r(x0);
    if (std::abs(f0) < target) return x0;
    double best = x0, fbest = std::abs(f0);
    double x1 = s0 + (s0 + 1e-10 <= fset.s_max() ? 1e-10 : -1e-10);
    double f1 = r(x1);
    for (int it = 0; it < 40; ++it) {
        if (std::abs(f1) < fbest) {
            best = x1;
            fbest = std::abs(f1);
        }
        if (fbest < target || f1 == f0) break;
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!std::isfinite(x2) || std::abs(x2 - s0) > 1e-6) break;
        x0 = x1;
        f0 = f1;
        x1 = std::clamp(x2, fset.s_min(), fset.s_max());
        f1 = r(x1);
    }
    return best;
}

inline double left_bc_value(const BoundaryConditionType& bc, const PhasePoint& start) {
    return bc.left == BcSide::value_zero ? start.x : start.y;
}

inline double set_param(const InitialSet& set, const PhasePoint& q) { return set.kind == SetKind::X01 ? q.x : q.y; }

// Damped Newton on the section point P: the boundary residuals of
// Phi_k^0(P) and Phi_k^T(P). Each residual sees only one half of the
// interval, so this survives when a single shot over [0,T] amplifies the
// datum error beyond the boundary tolerance.
inline std::optional<Trajectory> section_newton(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p,
                                                const BoundaryConditionType& bc, double kappa, PhasePoint P,
                                                const SolverConfig& cfg, double target) {
    const auto& icfg = cfg.refine_integrator;
    auto R = [&](const PhasePoint& q) {
        const PhasePoint a = poincare_map(w, g, p, kappa, 0.0, q, icfg);
        const PhasePoint b = poincare_map(w, g, p, kappa, w.T(), q, icfg);
        return std::array<double, 2>{left_bc_value(bc, a), right_bc_value(bc, b)};
    };
    auto norm = [](const std::array<double, 2>& r) { return std::max(std::abs(r[0]), std::abs(r[1])); };
    auto r = R(P);
    double nr = norm(r);
    for (int it = 0; it < 60 && nr >= target; ++it) {
        const double hx = 1e-8 * std::max(1.0, std::abs(P.x)), hy = 1e-8 * std::max(1.0, std::abs(P.y));
        const auto rx = R({P.x + hx, P.y}), ry = R({P.x, P.y + hy});
        const double j00 = (rx[0] - r[0]) / hx, j01 = (ry[0] - r[0]) / hy;
        const double j10 = (rx[1] - r[1]) / hx, j11 = (ry[1] - r[1]) / hy;
        const double det = j00 * j11 - j01 * j10;
        if (det == 0.0 || !std::isfinite(det)) break;
        const double dx = -(j11 * r[0] - j01 * r[1]) / det;
        const double dy = -(-j10 * r[0] + j00 * r[1]) / det;
        bool accepted = false;
        double damp = 1.0;
        for (int k = 0; k < 20 && !accepted; ++k, damp *= 0.5) {
            const PhasePoint Q{P.x + damp * dx, P.y + damp * dy};
            const auto rq = R(Q);
            if (norm(rq) < nr) {
                P = Q;
                r = rq;
                nr = norm(rq);
                accepted = true;
            }
        }
        if (!accepted) break;
    }
    if (!(nr < target)) return std::nullopt;
    return Trajectory::stitch(integrate(w, g, p, kappa, 0.0, P, icfg), integrate(w, g, p, kappa, w.T(), P, icfg));
}

// Boundary data at both ends; mirror images share u(0) but not u(T).
inline bool same_solution(const BvpSolution& a, const BvpSolution& b, double tol) {
    return std::abs(a.u0() - b.u0()) < tol && std::abs(a.du0() - b.du0()) < tol && std::abs(a.uT() - b.uT()) < tol
           && std::abs(a.duT() - b.duT()) < tol;
}

} // namespace detail

/// All verified positive solutions at (lambda, mu) for the given boundary
/// conditions, sorted by u(0) then u'(0). A NaN kappa selects the midpoint
/// of the first negativity interval.
inline std::vector<BvpSolution> solve_multiplicity(const WeightSpec& w, const Nonlinearity& g, const ParameterPair& p,
                                                   const BoundaryConditionType& bc,
                                                   double kappa = std::numeric_limits<double>::quiet_NaN(),
                                                   const SolverConfig& cfg = {}, SolveDiagnostics* diag = nullptr) {
    p.validate(cfg.allow_zero_mu);
    if (std::isnan(kappa)) kappa = detail::default_kappa(w);
    const auto plan = detail::plan_sections(w, kappa, cfg.second_kappa);
    SolveDiagnostics local;
    SolveDiagnostics& dg = diag ? *diag : local;
    dg = SolveDiagnostics{};

    const InitialSet fset = bc.forward_set(w, g, p.lambda);
    const InitialSet bset = bc.backward_set(w, g, p.lambda);

    std::vector<double> kappas{kappa};
    if (plan.kappa2) kappas.push_back(*plan.kappa2);
    std::vector<double> fsec = kappas, bsec = kappas;
    fsec.push_back(plan.tau_k);
    bsec.push_back(plan.sigma_k);
    auto uniq = [](std::vector<double>& v) {
        std::vector<double> out;
        for (double x : v)
            if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
        v = out;
    };
    uniq(fsec);
    uniq(bsec);
    const auto fc = shoot_sections(w, g, p, fset, fsec, cfg.shoot);
    const auto bc_ = shoot_sections(w, g, p, bset, bsec, cfg.shoot);
    auto find_sec = [](const std::vector<Continuum>& cs, double t) -> const Continuum& {
        for (const auto& c : cs)
            if (c.section_time == t) return c;
        throw NumericalError("missing section");
    };
    for (const auto& c : fc)
        for (const auto& m : c.warnings) dg.warnings.push_back(std::string("forward: ") + m);
    for (const auto& c : bc_)
        for (const auto& m : c.warnings) dg.warnings.push_back(std::string("backward: ") + m);

    // fingerprints from the ends of the negativity interval
    const auto f_fp = detect_crossings(find_sec(fc, plan.tau_k));
    const auto b_fp = detect_crossings(find_sec(bc_, plan.sigma_k));
    dg.bands_for_fingerprint = {f_fp.interior_bands.size(), b_fp.interior_bands.size()};
    dg.bands_at_section = {detect_crossings(find_sec(fc, kappa)).interior_bands.size(),
                           detect_crossings(find_sec(bc_, kappa)).interior_bands.size()};

    std::vector<BvpSolution> merged;
    for (double k : kappas) {
        const auto raw = intersect_continua(find_sec(fc, k), find_sec(bc_, k), cfg);
        dg.raw_candidates += raw.size();
        std::vector<BvpSolution> found(raw.size());
        std::vector<std::string> why(raw.size());
        std::vector<std::uint8_t> keep(raw.size(), 0);
        parallel_for(
            raw.size(),
            [&](std::size_t i) {
                const auto& r = raw[i];
                char buf[256];
                const double pscale = std::max({1.0, std::abs(r.point.x), std::abs(r.point.y)});
                if (!r.refined && r.residual > 1e-6 * pscale) {
                    std::snprintf(buf, sizeof buf, "kappa=%.6g s=(%.12g, %.12g): unrefined (|F|=%.3g)", k, r.s_left,
                                  r.s_right, r.residual);
                    why[i] = buf;
                    return;
                }
                BvpSolution sol;
                sol.bc = bc;
                sol.p = p;
                sol.kappa = k;
                sol.section_point = r.point;
                sol.kappa_gap = r.residual;
                sol.refined = r.refined;
                sol.right_param = r.s_right;
                // discard the shadows of the equilibria before any polishing
                const PhasePoint left0 = fset.point(r.s_left);
                if (std::abs(r.point.x) < cfg.trivial_eps && std::abs(r.point.y) < cfg.trivial_eps
                    && std::abs(left0.x) < cfg.trivial_eps && std::abs(left0.y) < cfg.trivial_eps) {
                    std::snprintf(buf, sizeof buf, "kappa=%.6g s=(%.12g, %.12g): trivial", k, r.s_left, r.s_right);
                    why[i] = buf;
                    return;
                }
                const double bc_target = 0.1 * ResidualReport{}.bc_tol;
                // single shot from the refined left datum
                if (r.refined) {
                    sol.left_param = detail::polish_left(w, g, p, bc, fset, r.s_left, cfg, bc_target);
                    sol.trajectory = integrate(w, g, p, 0.0, w.T(), fset.point(sol.left_param), cfg.refine_integrator);
                    sol.residuals = verify_solution(sol, w, g, cfg.residual_grid, cfg.fd_h);
                    sol.residuals.trivial_eps = cfg.trivial_eps;
                }
                // otherwise integrate outward from the section point
                if (!r.refined || !sol.residuals.ok()) {
                    const std::string first = r.refined ? sol.residuals.failure() : std::string("unrefined");
                    auto tr = detail::section_newton(w, g, p, bc, k, r.point, cfg, bc_target);
                    if (tr) {
                        BvpSolution alt = sol;
                        alt.trajectory = std::move(*tr);
                        alt.section_point = alt.trajectory(k);
                        alt.left_param = detail::set_param(fset, alt.trajectory.front());
                        alt.right_param = detail::set_param(bset, alt.trajectory.back());
                        alt.residuals = verify_solution(alt, w, g, cfg.residual_grid, cfg.fd_h);
                        alt.residuals.trivial_eps = cfg.trivial_eps;
                        if (alt.residuals.ok() || !r.refined) sol = std::move(alt);
                    }
                    if (!tr && !r.refined) {
                        std::snprintf(buf, sizeof buf, "kappa=%.6g s=(%.12g, %.12g): unrefined (|F|=%.3g)", k,
                                      r.s_left, r.s_right, r.residual);
                        why[i] = buf;
                        return;
                    }
                    if (!sol.residuals.ok()) {
                        std::snprintf(buf, sizeof buf, "kappa=%.6g s=(%.12g, %.12g): %s", k, r.s_left, r.s_right,
                                      (tr ? sol.residuals.failure() : first).c_str());
                        why[i] = buf;
                        return;
                    }
                }
                const auto bl = f_fp.band_of(sol.left_param);
                const auto br = b_fp.band_of(sol.right_param);
                sol.band_index_left = bl ? static_cast<int>(*bl) : -1;
                sol.band_index_right = br ? static_cast<int>(*br) : -1;
                found[i] = std::move(sol);
                keep[i] = 1;
            },
            cfg.shoot.threads);
        std::size_t count = 0;
        std::vector<BvpSolution> here;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (!keep[i]) {
                dg.rejected.push_back(why[i]);
                continue;
            }
            const bool dup = std::any_of(here.begin(), here.end(),
                                         [&](const BvpSolution& o) { return detail::same_solution(o, found[i], cfg.merge_tol); });
            if (!dup) here.push_back(std::move(found[i]));
        }
        count = here.size();
        dg.kappas.push_back(k);
        dg.counts_per_kappa.push_back(count);
        for (auto& s : here) {
            const bool dup = std::any_of(merged.begin(), merged.end(),
                                         [&](const BvpSolution& o) { return detail::same_solution(o, s, cfg.merge_tol); });
            if (!dup) merged.push_back(std::move(s));
        }
    }
    for (std::size_t i = 1; i < dg.counts_per_kappa.size(); ++i)
        if (dg.counts_per_kappa[i] != dg.counts_per_kappa[0]) dg.kappa_discrepancy = true;

    std::sort(merged.begin(), merged.end(), [](const BvpSolution& a, const BvpSolution& b) {
        return a.u0() != b.u0() ? a.u0() < b.u0() : a.du0() < b.du0();
    });
    for (std::size_t i = 0; i < merged.size(); ++i)
        for (std::size_t j = i + 1; j < merged.size(); ++j)
            if (merged[i].band_index_left == merged[j].band_index_left
                && merged[i].band_index_right == merged[j].band_index_right)
                dg.duplicate_fingerprint = true;
    return merged;
}

} // namespace indefshoot
