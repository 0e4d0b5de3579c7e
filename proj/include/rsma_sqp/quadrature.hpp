#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "rsma_sqp/errors.hpp"

namespace rsma_sqp::quad {

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::size_t max_panels = std::size_t{1} << 15;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t panels = 0;
};

namespace detail {

// Kronrod abscissae on [0, 1]; odd indices (1, 3, 5) and the centre are the Gauss points.
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (std::size_t i = 0; i < 7; ++i) {
        const double dx = half * kNodes[i];
        const double pair = f(centre - dx) + f(centre + dx);
        kronrod += kKronrodWeights[i] * pair;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

} // namespace detail

/// Single 15-point Kronrod panel, no refinement.
template <class F>
double kronrod_15(F&& f, double a, double b) {
    return detail::gauss_kronrod_15(f, a, b).value;
}

/// Integrate f over [a, b] until the summed error estimate drops below
/// max(abs_tol, rel_tol * |I|). Panels with the largest error are split first.
/// Throws NumericalError if the panel budget runs out.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
    if (!(b > a)) return {};

    std::priority_queue<detail::Panel> work;
    work.push(detail::gauss_kronrod_15(f, a, b));
    double total = work.top().value;
    double error = work.top().error;
    std::size_t panels = 1;

    // Accumulated separately so that refinement never loses already-converged mass.
    double settled_value = 0.0;
    double settled_error = 0.0;

    while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (work.empty()) break;
        if (panels >= opt.max_panels) {
            throw NumericalError("adaptive quadrature exceeded panel budget", error);
        }
        const detail::Panel worst = work.top();
        work.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        // Panel no longer resolvable in double precision; accept what we have.
        if (mid <= worst.a || mid >= worst.b ||
            (worst.b - worst.a) < 64 * std::numeric_limits<double>::epsilon() * std::abs(mid)) {
            settled_value += worst.value;
            settled_error += worst.error;
            continue;
        }
        const detail::Panel left = detail::gauss_kronrod_15(f, worst.a, mid);
        const detail::Panel right = detail::gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        work.push(left);
        work.push(right);
        ++panels;
    }

    // Recompute from the panels to avoid drift in the running sums.
    double value = settled_value;
    double err = settled_error;
    while (!work.empty()) {
        value += work.top().value;
        err += work.top().error;
        work.pop();
    }
    return {value, err, panels};
}

} // namespace rsma_sqp::quad
