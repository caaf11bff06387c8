#pragma once

// Adaptive Dormand-Prince 5(4) integration of the phase system, in forward
// or backward time, with:
//
//   - two augmented quadrature states, dr/dt = omega and df/dt = n*x - y,
//     carried inside the ODE state so they inherit the step error control,
//   - fourth-order dense output on every accepted step,
//   - event detection localized on the dense output to a time width 1e-12,
//   - blow-up and collapse guards,
//   - compensated (Kahan) state updates; near the equilibria the state sits
//     at O(1) while the increments are exponentially small, and plain
//     summation would round the increments away at machine epsilon times
//     the state scale. Compensation keeps shooting bisection well below
//     that floor.
//
// The scalar type is a template parameter; double for general use, a wider
// type (long double, float128) where trajectory-level sensitivity demands.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "phase.hpp"

namespace shrinksol {

template <class Real = double>
struct AugmentedState {
    PhasePoint<Real> p;
    Real r{};
    Real f{};
};

enum class EventKind : std::uint8_t {
    XCrosses,        // x - threshold
    DxDtCrossesZero, // dx/dt
    YCrossesZero,    // y
    ProximityP1,     // |p - P1| - threshold
    OmegaBelowFloor, // omega - threshold
    AbsXAboveCeiling // |x| - threshold
};

enum class EventDirection : std::uint8_t { Rising, Falling, Any };

template <class Real = double>
struct EventSpec {
    EventKind kind{};
    Real threshold{};
    EventDirection direction = EventDirection::Any;
    bool stop = false;
};

enum class Termination : std::uint8_t {
    HorizonReached,
    EventStop,
    BlowupDetected,
    CollapseDetected,
    StepUnderflow
};

template <class Real = double>
struct Tolerances {
    Real rtol = Real(1e-10);
    Real atol = Real(1e-12);
};

template <class Real = double>
struct IntegrateOptions {
    Tolerances<Real> tol{};
    std::vector<EventSpec<Real>> events{};
    Real max_step = Real(0); // 0: no cap
    Real initial_step = Real(1e-6);
    Real blowup_x = Real(1e6);
    Real collapse_omega = Real(1e-12);
    bool record_dense = true;
};

template <class Real = double>
struct Sample {
    Real t;
    AugmentedState<Real> state;
};

template <class Real = double>
struct EventHit {
    Real t;
    EventSpec<Real> spec;
    AugmentedState<Real> state;
};

namespace detail {

template <class Real>
using Vec5 = std::array<Real, 5>;

template <class Real>
inline Vec5<Real> pack(const AugmentedState<Real>& s) {
    return {s.p.omega, s.p.x, s.p.y, s.r, s.f};
}

template <class Real>
inline AugmentedState<Real> unpack(const Vec5<Real>& v) {
    return {{v[0], v[1], v[2]}, v[3], v[4]};
}

// Right-hand side in internal (non-decreasing) time; dir flips the field
// for backward runs.
template <class Real>
inline Vec5<Real> rhs(const SolitonParams<Real>& params, Real dir, const Vec5<Real>& u) {
    const Velocity<Real> v = phi_unchecked(params, PhasePoint<Real>{u[0], u[1], u[2]});
    const Real n = Real(params.n);
    return {dir * v.d_omega, dir * v.d_x, dir * v.d_y, dir * u[0],
            dir * (n * u[1] - u[2])};
}

template <class Real>
inline bool finite5(const Vec5<Real>& v) {
    using std::isfinite;
    for (const Real& c : v)
        if (!isfinite(c)) return false;
    return true;
}

} // namespace detail

// One accepted step's dense interpolant (quartic in the step fraction).
template <class Real = double>
struct DenseStep {
    Real t0; // public (signed) time at the step start
    Real dt; // public signed step, t0 + dt is the step end
    std::array<detail::Vec5<Real>, 5> rcont;

    detail::Vec5<Real> eval(Real t) const {
        const Real th = (t - t0) / dt;
        const Real th1 = Real(1) - th;
        detail::Vec5<Real> out;
        for (int i = 0; i < 5; ++i)
            out[i] = rcont[0][i] +
                     th * (rcont[1][i] +
                           th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
        return out;
    }
};

template <class Real = double>
struct Trajectory {
    SolitonParams<Real> params{};
    std::vector<Sample<Real>> samples;   // accepted step ends, t strictly monotone
    std::vector<EventHit<Real>> events;
    Termination termination = Termination::HorizonReached;
    std::vector<DenseStep<Real>> steps;

    bool forward() const {
        return samples.size() < 2 || samples.back().t >= samples.front().t;
    }

    Real t_begin() const { return samples.front().t; }
    Real t_end() const { return samples.back().t; }

    // Dense evaluation; t is clamped to the covered span.
    AugmentedState<Real> sample_at(Real t) const {
        if (steps.empty()) return samples.front().state;
        const bool fwd = forward();
        const Real lo = fwd ? t_begin() : t_end();
        const Real hi = fwd ? t_end() : t_begin();
        t = std::min(std::max(t, lo), hi);
        auto it = std::lower_bound(steps.begin(), steps.end(), t,
                                   [fwd](const DenseStep<Real>& s, Real tt) {
                                       return fwd ? s.t0 + s.dt < tt : s.t0 + s.dt > tt;
                                   });
        if (it == steps.end()) --it;
        return detail::unpack(it->eval(t));
    }
};

namespace detail {

// Event function; sign changes mark hits. Values within the deadband count
// as zero so that trajectories jittering on an invariant locus at rounding
// scale do not fire spurious events.
inline constexpr double event_deadband = 1e-13;

template <class Real>
inline Real event_value(const SolitonParams<Real>& params, const EventSpec<Real>& spec,
                        const Vec5<Real>& u) {
    using std::abs;
    using std::sqrt;
    switch (spec.kind) {
        case EventKind::XCrosses: return u[1] - spec.threshold;
        case EventKind::DxDtCrossesZero:
            return phi_unchecked(params, PhasePoint<Real>{u[0], u[1], u[2]}).d_x;
        case EventKind::YCrossesZero: return u[2];
        case EventKind::ProximityP1: {
            const Real n = Real(params.n);
            const Real dw = u[0], dx = u[1] + Real(1), dy = u[2] + n;
            return sqrt(dw * dw + dx * dx + dy * dy) - spec.threshold;
        }
        case EventKind::OmegaBelowFloor: return u[0] - spec.threshold;
        case EventKind::AbsXAboveCeiling: return abs(u[1]) - spec.threshold;
    }
    return Real(0);
}

template <class Real>
inline int event_sign(Real g) {
    using std::abs;
    if (abs(g) <= Real(event_deadband)) return 0;
    return g > Real(0) ? 1 : -1;
}

inline bool direction_matches(EventDirection dir, int s_before, int s_after) {
    if (s_before == s_after || s_before == 0 || s_after == 0) return false;
    if (dir == EventDirection::Rising) return s_after > 0;
    if (dir == EventDirection::Falling) return s_after < 0;
    return true;
}

} // namespace detail

// Locates the first matching sign change of the event function over the
// trajectory's dense steps; bisects the step to a time width of 1e-12.
template <class Real>
inline std::optional<EventHit<Real>> locate_event(const Trajectory<Real>& traj,
                                                  const EventSpec<Real>& spec) {
    using detail::event_sign;
    using detail::event_value;
    const SolitonParams<Real>& params = traj.params;
    for (const auto& step : traj.steps) {
        Real ta = step.t0, tb = step.t0 + step.dt;
        const Real ga = event_value(params, spec, step.eval(ta));
        const Real gb = event_value(params, spec, step.eval(tb));
        const int sa = event_sign(ga), sb = event_sign(gb);
        if (!detail::direction_matches(spec.direction, sa, sb)) continue;
        using std::abs;
        while (abs(tb - ta) > Real(1e-12)) {
            const Real tm = (ta + tb) / Real(2);
            if (tm == ta || tm == tb) break;
            const int sm = event_sign(event_value(params, spec, step.eval(tm)));
            if (sm == sa || sm == 0)
                ta = tm;
            else
                tb = tm;
        }
        const Real t_star = (ta + tb) / Real(2);
        return EventHit<Real>{t_star, spec, detail::unpack(step.eval(t_star))};
    }
    return std::nullopt;
}

// Integrates from `initial` at time t0 to the horizon t1 (t1 < t0 runs the
// field backward). Samples are recorded at accepted step ends. Throws
// std::domain_error for invalid inputs.
template <class Real = double>
Trajectory<Real> integrate(const SolitonParams<Real>& params, const AugmentedState<Real>& initial,
                           Real t0, Real t1, const IntegrateOptions<Real>& opts = {}) {
    using detail::Vec5;
    using std::abs;
    using std::isfinite;
    using std::max;
    using std::min;
    using std::pow;
    using std::sqrt;

    validate(params);
    Vec5<Real> u = detail::pack(initial);
    if (!detail::finite5(u)) throw std::domain_error("integrate: non-finite initial state");
    if (!isfinite(t0) || !isfinite(t1) || t0 == t1)
        throw std::domain_error("integrate: empty or non-finite time span");
    const Real eps = std::numeric_limits<Real>::epsilon();
    if (!(opts.tol.rtol >= Real(100) * eps) || !(opts.tol.atol > Real(0)))
        throw std::domain_error("integrate: tolerances too tight for the scalar type");

    // Dormand-Prince 5(4) coefficients.
    static const Real a21 = Real(1) / 5;
    static const Real a31 = Real(3) / 40, a32 = Real(9) / 40;
    static const Real a41 = Real(44) / 45, a42 = Real(-56) / 15, a43 = Real(32) / 9;
    static const Real a51 = Real(19372) / 6561, a52 = Real(-25360) / 2187,
                      a53 = Real(64448) / 6561, a54 = Real(-212) / 729;
    static const Real a61 = Real(9017) / 3168, a62 = Real(-355) / 33,
                      a63 = Real(46732) / 5247, a64 = Real(49) / 176,
                      a65 = Real(-5103) / 18656;
    static const Real b1 = Real(35) / 384, b3 = Real(500) / 1113, b4 = Real(125) / 192,
                      b5 = Real(-2187) / 6784, b6 = Real(11) / 84;
    static const Real e1 = Real(71) / 57600, e3 = Real(-71) / 16695, e4 = Real(71) / 1920,
                      e5 = Real(-17253) / 339200, e6 = Real(22) / 525, e7 = Real(-1) / 40;
    // Dense-output weights.
    static const Real d1 = Real(-12715105075.0L) / Real(11282082432.0L);
    static const Real d3 = Real(87487479700.0L) / Real(32700410799.0L);
    static const Real d4 = Real(-10690763975.0L) / Real(1880347072.0L);
    static const Real d5 = Real(701980252875.0L) / Real(199316789632.0L);
    static const Real d6 = Real(-1453857185.0L) / Real(822651844.0L);
    static const Real d7 = Real(69997945.0L) / Real(29380423.0L);

    const Real dir = t1 > t0 ? Real(1) : Real(-1);
    const Real span = abs(t1 - t0);

    Trajectory<Real> traj;
    traj.params = params;
    traj.samples.push_back({t0, initial});

    Vec5<Real> comp{};                               // Kahan compensation
    Vec5<Real> k1 = detail::rhs(params, dir, u), k2, k3, k4, k5, k6, k7;
    Real s = Real(0);                                // internal time, 0 -> span
    Real h = min(opts.initial_step, span);
    if (opts.max_step > Real(0)) h = min(h, opts.max_step);

    bool nonfinite_rejection = false;

    auto arg = [&](const Vec5<Real>& base, Real hh, std::initializer_list<std::pair<Real, const Vec5<Real>*>> terms) {
        Vec5<Real> out;
        for (int i = 0; i < 5; ++i) {
            Real acc = Real(0);
            for (const auto& [w, k] : terms) acc += w * (*k)[i];
            out[i] = base[i] + hh * acc;
        }
        return out;
    };

    while (s < span) {
        const Real remaining = span - s;
        if (remaining <= span * eps * Real(8)) break;
        h = min(h, remaining);

        k2 = detail::rhs(params, dir, arg(u, h, {{a21, &k1}}));
        k3 = detail::rhs(params, dir, arg(u, h, {{a31, &k1}, {a32, &k2}}));
        k4 = detail::rhs(params, dir, arg(u, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        k5 = detail::rhs(params, dir,
                         arg(u, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        k6 = detail::rhs(
            params, dir,
            arg(u, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));

        Vec5<Real> du, u1, comp1;
        for (int i = 0; i < 5; ++i)
            du[i] = h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        // Compensated candidate update; committed only on acceptance.
        for (int i = 0; i < 5; ++i) {
            const Real yv = du[i] - comp[i];
            const Real tv = u[i] + yv;
            comp1[i] = (tv - u[i]) - yv;
            u1[i] = tv;
        }
        k7 = detail::rhs(params, dir, u1);

        if (!detail::finite5(u1) || !detail::finite5(k7)) {
            nonfinite_rejection = true;
            h *= Real(0.25);
            if (h < Real(1e-15)) {
                traj.termination = Termination::BlowupDetected;
                return traj;
            }
            continue;
        }

        Real err2 = Real(0);
        for (int i = 0; i < 5; ++i) {
            const Real ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                 e6 * k6[i] + e7 * k7[i]);
            const Real sc = opts.tol.atol + opts.tol.rtol * max(abs(u[i]), abs(u1[i]));
            err2 += (ei / sc) * (ei / sc);
        }
        const Real err = sqrt(err2 / Real(5));
        if (!isfinite(err)) {
            nonfinite_rejection = true;
            h *= Real(0.25);
            if (h < Real(1e-15)) {
                traj.termination = Termination::BlowupDetected;
                return traj;
            }
            continue;
        }

        if (err <= Real(1)) {
            const Real t_prev = t0 + dir * s;
            const Real t_new = t0 + dir * (s + h);

            DenseStep<Real> dense;
            dense.t0 = t_prev;
            dense.dt = dir * h;
            for (int i = 0; i < 5; ++i) {
                const Real dy = u1[i] - u[i];
                const Real bspl = h * k1[i] - dy;
                dense.rcont[0][i] = u[i];
                dense.rcont[1][i] = dy;
                dense.rcont[2][i] = bspl;
                dense.rcont[3][i] = dy - h * k7[i] - bspl;
                dense.rcont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                         d6 * k6[i] + d7 * k7[i]);
            }

            // Event scan over this step.
            std::optional<EventHit<Real>> stop_hit;
            std::vector<EventHit<Real>> step_hits;
            if (!opts.events.empty()) {
                Trajectory<Real> one;
                one.params = params;
                one.samples.push_back({t_prev, detail::unpack(u)});
                one.steps.push_back(dense);
                for (const auto& spec : opts.events) {
                    auto hit = locate_event(one, spec);
                    if (!hit) continue;
                    if (spec.stop && (!stop_hit || abs(hit->t - t_prev) < abs(stop_hit->t - t_prev)))
                        stop_hit = hit;
                    step_hits.push_back(*hit);
                }
                std::sort(step_hits.begin(), step_hits.end(),
                          [dir](const EventHit<Real>& a, const EventHit<Real>& b) {
                              return dir > Real(0) ? a.t < b.t : a.t > b.t;
                          });
            }
            for (const auto& hit : step_hits) {
                if (stop_hit && abs(hit.t - t_prev) > abs(stop_hit->t - t_prev)) break;
                traj.events.push_back(hit);
            }
            if (opts.record_dense) traj.steps.push_back(dense);

            if (stop_hit) {
                traj.samples.push_back({stop_hit->t, stop_hit->state});
                traj.termination = Termination::EventStop;
                return traj;
            }

            const Real omega_prev = u[0];
            u = u1;
            comp = comp1;
            k1 = k7;
            s += h;
            nonfinite_rejection = false;
            traj.samples.push_back({t_new, detail::unpack(u)});

            if (abs(u[1]) > opts.blowup_x) {
                traj.termination = Termination::BlowupDetected;
                return traj;
            }
            // Collapse means falling through the floor, not starting under it:
            // seeds grown from an equilibrium begin with omega far below any
            // reasonable floor and must be allowed to rise first.
            if (omega_prev >= opts.collapse_omega && u[0] < opts.collapse_omega &&
                abs(u[1]) >= Real(0.5)) {
                traj.termination = Termination::CollapseDetected;
                return traj;
            }
            if (s >= span) break;
        }

        Real fac = err > Real(0) ? Real(0.9) * pow(err, Real(-0.2)) : Real(10);
        fac = min(Real(10), max(Real(0.2), fac));
        h *= fac;
        if (opts.max_step > Real(0)) h = min(h, opts.max_step);
        if (h < Real(1e-15)) {
            traj.termination =
                nonfinite_rejection ? Termination::BlowupDetected : Termination::StepUnderflow;
            return traj;
        }
    }

    traj.termination = Termination::HorizonReached;
    return traj;
}

} // namespace shrinksol
