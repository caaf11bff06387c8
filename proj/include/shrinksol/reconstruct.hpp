#pragma once

// Radial metric profiles recovered from phase trajectories by quadrature,
// sectional curvatures, residuals of the second-order soliton system, the
// conserved scalar field R + (f')^2 - 2*lambda*f, and pole-smoothness checks.

#include <shrinksol/integrate.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shrinksol {

// Profile of a warped-product metric dr^2 + omega(r)^2 g_sphere on an
// increasing radial grid. x duplicates d(omega)/dr, fprime = df/dr.
// R = 2n*nu1 + n(n-1)*nu2 holds exactly at every point by construction.
template <class Real = double>
struct MetricProfile {
    std::vector<Real> r;
    std::vector<Real> omega;
    std::vector<Real> x;
    std::vector<Real> fprime;
    std::vector<Real> f;
    std::vector<Real> nu1;
    std::vector<Real> nu2;
    std::vector<Real> R;

    std::size_t size() const { return r.size(); }
};

template <class Real = double>
struct Curvatures {
    Real nu1;  // radial two-planes: -(dx/dt)/omega^2
    Real nu2;  // orbital two-planes: (1 - x^2)/omega^2
};

// Sectional curvatures at a phase point with omega > 0.
template <class Real>
Curvatures<Real> sectional_curvatures(const SolitonParams<Real>& params, const PhasePoint<Real>& p) {
    validate(params);
    if (!(p.omega > Real(0)))
        throw std::domain_error("sectional_curvatures: requires omega > 0");
    const Real w2 = p.omega * p.omega;
    const Velocity<Real> v = phi_unchecked(params, p);
    return {-v.d_x / w2, (Real(1) - p.x * p.x) / w2};
}

// Rebuild the radial profile from a trajectory's augmented state. The grid is
// r from quadrature, shifted so the trajectory's first sample sits at r_anchor;
// f is shifted to 0 there (the system determines f only through f' and f'').
// Backward trajectories produce decreasing r and are reversed into grid order.
// When max_dr > 0 the trajectory's dense output is resampled so consecutive
// grid points are at most max_dr apart; otherwise the accepted steps are used.
template <class Real>
MetricProfile<Real> reconstruct_profile(const SolitonParams<Real>& params, const Trajectory<Real>& traj,
                                        Real r_anchor = Real(0), Real max_dr = Real(0)) {
    validate(params);
    if (traj.samples.empty())
        throw std::invalid_argument("reconstruct_profile: empty trajectory");

    std::vector<std::pair<Real, AugmentedState<Real>>> pts;  // (t, state)
    if (max_dr > Real(0)) {
        const Real t0 = traj.t_begin(), t1 = traj.t_end();
        const Real dir = traj.forward() ? Real(1) : Real(-1);
        const Real span = (t1 - t0) * dir;
        Real t = t0;
        for (;;) {
            pts.emplace_back(t, traj.sample_at(t));
            if ((t1 - t) * dir <= Real(0)) break;
            const Real w = pts.back().second.p.omega;
            // dr = omega*dt, so the step in t that advances r by max_dr is
            // max_dr/omega; capped so coarse requests still yield a grid.
            Real dt = max_dr / std::max(std::abs(w), Real(1e-8));
            dt = std::min(dt, span / Real(8));
            Real tn = t + dir * dt;
            if ((t1 - tn) * dir <= Real(0)) tn = t1;
            t = tn;
        }
    } else {
        pts.reserve(traj.samples.size());
        for (const auto& s : traj.samples) pts.emplace_back(s.t, s.state);
    }

    for (const auto& [t, s] : pts)
        if (!(s.p.omega > Real(0)))
            throw std::domain_error("reconstruct_profile: sample with omega <= 0");

    const Real r0 = pts.front().second.r;
    const Real f0 = pts.front().second.f;
    if (!traj.forward()) std::reverse(pts.begin(), pts.end());

    MetricProfile<Real> prof;
    const Real n = Real(params.n);
    for (const auto& [t, s] : pts) {
        const Real r = (s.r - r0) + r_anchor;
        if (!prof.r.empty() && !(r > prof.r.back())) continue;  // drop zero-length gaps
        const Real w = s.p.omega, x = s.p.x, y = s.p.y;
        const Real w2 = w * w;
        const Velocity<Real> v = phi_unchecked(params, s.p);
        const Real nu1 = -v.d_x / w2;
        const Real nu2 = (Real(1) - x * x) / w2;
        prof.r.push_back(r);
        prof.omega.push_back(w);
        prof.x.push_back(x);
        prof.fprime.push_back((n * x - y) / w);
        prof.f.push_back(s.f - f0);
        prof.nu1.push_back(nu1);
        prof.nu2.push_back(nu2);
        prof.R.push_back(Real(2) * n * nu1 + n * (n - Real(1)) * nu2);
    }
    return prof;
}

// Residuals of the radial soliton system at the interior grid points:
//   res1 = f'' - lambda - n*omega''/omega
//   res2 = omega*omega'*f' - lambda*omega^2 - omega*omega'' - (n-1)*((omega')^2 - 1)
// omega'' and f'' come from centered nonuniform differences of the stored
// first derivatives (x and fprime), exact on quadratics.
template <class Real = double>
struct ResidualField {
    std::vector<Real> r;  // interior grid
    std::vector<Real> res1;
    std::vector<Real> res2;
};

namespace detail {

// d/dr at the middle of three points with spacings h1 = r1-r0, h2 = r2-r1.
template <class Real>
Real centered_deriv(Real h1, Real h2, Real u0, Real u1, Real u2) {
    return (-h2 / (h1 * (h1 + h2))) * u0 + ((h2 - h1) / (h1 * h2)) * u1 +
           (h1 / (h2 * (h1 + h2))) * u2;
}

}  // namespace detail

template <class Real>
ResidualField<Real> soliton_residual(const SolitonParams<Real>& params, const MetricProfile<Real>& prof) {
    validate(params);
    if (prof.size() < 5)
        throw std::invalid_argument("soliton_residual: need at least 5 grid points");
    const Real n = Real(params.n), lam = params.lambda;
    ResidualField<Real> out;
    for (std::size_t i = 1; i + 1 < prof.size(); ++i) {
        const Real h1 = prof.r[i] - prof.r[i - 1];
        const Real h2 = prof.r[i + 1] - prof.r[i];
        const Real wpp = detail::centered_deriv(h1, h2, prof.x[i - 1], prof.x[i], prof.x[i + 1]);
        const Real fpp = detail::centered_deriv(h1, h2, prof.fprime[i - 1], prof.fprime[i], prof.fprime[i + 1]);
        const Real w = prof.omega[i], wp = prof.x[i], fp = prof.fprime[i];
        out.r.push_back(prof.r[i]);
        out.res1.push_back(fpp - lam - n * wpp / w);
        out.res2.push_back(w * wp * fp - lam * w * w - w * wpp - (n - Real(1)) * (wp * wp - Real(1)));
    }
    return out;
}

// Per-point value of R + (f')^2 - 2*lambda*f. Constant along any solution of
// the radial system; the constant depends on the additive gauge chosen for f.
template <class Real>
std::vector<Real> hamilton_identity(const SolitonParams<Real>& params, const MetricProfile<Real>& prof) {
    validate(params);
    std::vector<Real> field;
    field.reserve(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i)
        field.push_back(prof.R[i] + prof.fprime[i] * prof.fprime[i] -
                        Real(2) * params.lambda * prof.f[i]);
    return field;
}

// Which extreme of a trajectory's time interval to examine.
enum class TrajEnd { Forward, Backward };

enum class PoleVerdict { SmoothPole, NotAPole };

// A metric closes smoothly at an end where omega -> 0 with omega' -> +1
// (origin-type pole) or -1 (far-type pole). Only these first-order limits are
// checked; sign is +1/-1 for a smooth pole and 0 otherwise.
template <class Real = double>
struct SmoothnessReport {
    TrajEnd end;
    Real omega_limit;
    Real x_limit;
    PoleVerdict verdict;
    int sign;
};

namespace detail {

// Aitken extrapolation of a geometrically converging triple (u0 furthest from
// the end, u2 at the end). Falls back to u2 when there is no contraction.
template <class Real>
Real aitken(Real u0, Real u1, Real u2) {
    const Real denom = u2 - Real(2) * u1 + u0;
    const Real scale = std::max({std::abs(u0), std::abs(u1), std::abs(u2), Real(1)});
    if (std::abs(denom) < scale * Real(1e-13)) return u2;
    return u2 - (u2 - u1) * (u2 - u1) / denom;
}

}  // namespace detail

// Extrapolate (omega, x) at one end of the trajectory. Equilibrium approach is
// exponential in t, so Aitken over three samples spanning the tail converges.
template <class Real>
SmoothnessReport<Real> smoothness_check(const Trajectory<Real>& traj, TrajEnd end) {
    const Real ta = traj.t_begin(), tb = traj.t_end();
    const Real tmin = std::min(ta, tb), tmax = std::max(ta, tb);
    const Real t_star = (end == TrajEnd::Forward) ? tmax : tmin;
    const Real into = (end == TrajEnd::Forward) ? Real(-1) : Real(1);  // toward the interior
    const Real window = std::min((tmax - tmin) / Real(2), Real(6));

    SmoothnessReport<Real> rep{end, Real(0), Real(0), PoleVerdict::NotAPole, 0};
    if (!(window > Real(0))) {
        const auto s = traj.sample_at(t_star);
        rep.omega_limit = s.p.omega;
        rep.x_limit = s.p.x;
        return rep;
    }
    const auto s2 = traj.sample_at(t_star);
    const auto s1 = traj.sample_at(t_star + into * window / Real(2));
    const auto s0 = traj.sample_at(t_star + into * window);
    rep.omega_limit = detail::aitken(s0.p.omega, s1.p.omega, s2.p.omega);
    rep.x_limit = detail::aitken(s0.p.x, s1.p.x, s2.p.x);

    const bool decaying = std::abs(s2.p.omega) < std::abs(s0.p.omega);
    const bool vanishes = std::abs(rep.omega_limit) < Real(1e-3) && decaying;
    if (vanishes && std::abs(std::abs(rep.x_limit) - Real(1)) < Real(0.05)) {
        rep.verdict = PoleVerdict::SmoothPole;
        rep.sign = rep.x_limit > Real(0) ? 1 : -1;
    }
    return rep;
}

}  // namespace shrinksol
