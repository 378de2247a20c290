#pragma once

// Reference computations that share no code with the library: composite
// Simpson quadrature and fixed-step RK4 for the sin(pi t) weight.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace oracle {

template <class F>
double simpson(F f, double a, double b, std::size_t n) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
    return s * h / 3.0;
}

inline double g(double s) { return (s <= 0.0 || s >= 1.0) ? 0.0 : s * s * (1.0 - s); }

inline double sin_weight(double t, double lambda, double mu) {
    const double a = std::sin(std::numbers::pi * t);
    return a >= 0.0 ? lambda * a : mu * a;
}

// Minimum of s^2(1-s) on [a,b]: the function is unimodal on [0,1], so an
// endpoint holds the minimum.
inline double g_min(double a, double b) { return std::min(g(a), g(b)); }

// lambda* by nested Simpson: int_0^t1 int_0^xi sin(pi z) dz dxi.
inline double lambda_star(double nu0, double nu1, double t1, std::size_t n = 1000000) {
    const double pi = std::numbers::pi;
    // the inner primitive is accumulated along the outer grid (Simpson on
    // each panel and on its left half for the midpoint value)
    const std::size_t m = n % 2 ? n + 1 : n;
    const double h = t1 / static_cast<double>(m);
    auto a = [&](double t) { return std::max(std::sin(pi * t), 0.0); };
    double inner = 0.0, outer = 0.0;
    double prev = 0.0; // inner(0)
    for (std::size_t i = 0; i < m; ++i) {
        const double t0 = h * static_cast<double>(i), t2 = t0 + h;
        const double next = inner + h / 6.0 * (a(t0) + 4.0 * a(t0 + 0.5 * h) + a(t2));
        const double mid = inner + h / 12.0 * (a(t0) + 4.0 * a(t0 + 0.25 * h) + a(t0 + 0.5 * h));
        outer += h / 6.0 * (prev + 4.0 * mid + next);
        inner = next;
        prev = next;
    }
    return (nu0 - nu1) / (g_min(nu1, nu0) * outer);
}

// mu* with omega: int_sigma^t2 int_sigma^xi a^-(z) dz dxi, same scheme.
inline double mu_star(double nu2, double nu_sigma, double t2, double omega, double sigma = 1.0,
                      std::size_t n = 1000000) {
    const double pi = std::numbers::pi;
    const std::size_t m = n % 2 ? n + 1 : n;
    const double h = (t2 - sigma) / static_cast<double>(m);
    auto a = [&](double t) { return std::max(-std::sin(pi * t), 0.0); };
    double inner = 0.0, outer = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double t0 = sigma + h * static_cast<double>(i), tn = t0 + h;
        const double next = inner + h / 6.0 * (a(t0) + 4.0 * a(t0 + 0.5 * h) + a(tn));
        const double mid = inner + h / 12.0 * (a(t0) + 4.0 * a(t0 + 0.25 * h) + a(t0 + 0.5 * h));
        outer += h / 6.0 * (prev + 4.0 * mid + next);
        inner = next;
        prev = next;
    }
    return (nu2 - nu_sigma + (t2 - sigma) * omega) / (g_min(0.5 * nu_sigma, nu2) * outer);
}

// delta~ = 1.01 (1/sigma + lambda int_0^sigma a^+ max g), max g from a scan.
inline double delta_tilde(double lambda, double sigma = 1.0, std::size_t n = 1000000) {
    const double pi = std::numbers::pi;
    const double ap = simpson([&](double t) { return std::max(std::sin(pi * t), 0.0); }, 0.0, sigma, n);
    double gmax = 0.0;
    for (std::size_t i = 0; i <= n; ++i) gmax = std::max(gmax, g(static_cast<double>(i) / static_cast<double>(n)));
    return 1.01 * (1.0 / sigma + lambda * ap * gmax);
}

using State = std::array<double, 2>;

// Classical RK4 with fixed step h on [t0,t1] (t1 < t0 allowed) for
// x' = y, y' = -W(t) g(x); steps are aligned to the integer nodes.
inline State rk4(double lambda, double mu, double t0, double t1, State z, double h) {
    auto f = [&](double t, const State& s) {
        return State{s[1], -sin_weight(t, lambda, mu) * g(s[0])};
    };
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double t = t0;
    while (dir * (t1 - t) > 0.0) {
        // next integer node in the direction of travel
        double stop = dir > 0 ? std::floor(t + 1e-12) + 1.0 : std::ceil(t - 1e-12) - 1.0;
        if (dir * (stop - t1) > 0.0) stop = t1;
        const std::size_t n = static_cast<std::size_t>(std::ceil(std::abs(stop - t) / h));
        const double hh = (stop - t) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const State k1 = f(t, z);
            const State k2 = f(t + 0.5 * hh, {z[0] + 0.5 * hh * k1[0], z[1] + 0.5 * hh * k1[1]});
            const State k3 = f(t + 0.5 * hh, {z[0] + 0.5 * hh * k2[0], z[1] + 0.5 * hh * k2[1]});
            const State k4 = f(t + hh, {z[0] + hh * k3[0], z[1] + hh * k3[1]});
            z[0] += hh / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
            z[1] += hh / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
            t += hh;
        }
        t = stop;
    }
    return z;
}

} // namespace oracle
