#pragma once

// Property checks on the phase flow and the shooting machinery built on them:
//
//   - preservation of the invariant half-space regions under the flow,
//   - strict decrease of Q = y/omega and its derivative identity,
//   - propagation of the sign of x out of {x = 0},
//   - completeness estimation from the growth of the radial coordinate,
//   - blow-up rate bounds,
//   - trajectory classification and the theta-sweep over the seed circle,
//   - bisection for the connecting orbit between the two saddle points.
//
// Randomized checks draw every start from a caller-supplied (or default)
// seed before any integration begins, so reports are reproducible and
// independent of scheduling. Member runs execute concurrently and write to
// preassigned slots.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "equilibria.hpp"
#include "integrate.hpp"
#include "phase.hpp"
#include "precision.hpp"
#include "reconstruct.hpp"

namespace shrinksol {

enum class FlowDirection : std::uint8_t { Forward, Backward };

inline constexpr std::uint64_t default_property_seed = 0x5eed5eedULL;

// ---------------------------------------------------------------------------
// Region preservation

// A region to test, its run direction, and the box the random starts are
// rejection-sampled from (ranges for omega, x, y; the dx/dt atoms are
// enforced by the rejection step).
template <class Real = double>
struct RegionCase {
    Region<Real> region;
    FlowDirection direction = FlowDirection::Forward;
    std::array<std::array<Real, 2>, 3> box{};
};

// The six half-space regions the flow preserves: three forward, and their
// images under the symmetry L combined with time reversal.
template <class Real = double>
inline std::vector<RegionCase<Real>> preserved_region_cases() {
    const Real inf = std::numeric_limits<Real>::infinity();
    auto ge = [](Coord c, Real b) { return RegionAtom<Real>{c, Rel::Ge, b}; };
    auto le = [](Coord c, Real b) { return RegionAtom<Real>{c, Rel::Le, b}; };
    std::vector<RegionCase<Real>> cases;
    cases.push_back({{"x >= 1, dx/dt >= 0", {ge(Coord::X, Real(1)), ge(Coord::DxDt, Real(0))}},
                     FlowDirection::Forward,
                     {{{Real(0.05), Real(1)}, {Real(1), Real(2.5)}, {Real(-3), Real(3)}}}});
    cases.push_back({{"x <= -1, dx/dt <= 0", {le(Coord::X, Real(-1)), le(Coord::DxDt, Real(0))}},
                     FlowDirection::Forward,
                     {{{Real(0.05), Real(1)}, {Real(-2.5), Real(-1)}, {Real(-3), Real(3)}}}});
    cases.push_back({{"y <= 0", {le(Coord::Y, Real(0))}},
                     FlowDirection::Forward,
                     {{{Real(0.1), Real(2)}, {Real(-2), Real(2)}, {Real(-5), Real(0)}}}});
    cases.push_back({{"x <= -1, dx/dt >= 0", {le(Coord::X, Real(-1)), ge(Coord::DxDt, Real(0))}},
                     FlowDirection::Backward,
                     {{{Real(0.05), Real(1)}, {Real(-2.5), Real(-1)}, {Real(-3), Real(3)}}}});
    cases.push_back({{"x >= 1, dx/dt <= 0", {ge(Coord::X, Real(1)), le(Coord::DxDt, Real(0))}},
                     FlowDirection::Backward,
                     {{{Real(0.05), Real(1)}, {Real(1), Real(2.5)}, {Real(-3), Real(3)}}}});
    cases.push_back({{"y >= 0", {ge(Coord::Y, Real(0))}},
                     FlowDirection::Backward,
                     {{{Real(0.1), Real(2)}, {Real(-2), Real(2)}, {Real(0), Real(5)}}}});
    (void)inf;
    return cases;
}

struct RegionReport {
    std::string region;
    int samples = 0;
    int exits = 0;
    double first_exit_t = std::numeric_limits<double>::quiet_NaN();
    int blowups = 0;
    int collapses = 0;
    int horizons = 0;
    int underflows = 0;
    std::uint64_t seed = 0;
};

namespace detail {

template <class Real>
inline PhasePoint<Real> draw_in_region(const SolitonParams<Real>& params,
                                       const RegionCase<Real>& rc, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        PhasePoint<Real> p;
        Real* coords[3] = {&p.omega, &p.x, &p.y};
        for (int i = 0; i < 3; ++i) {
            const Real lo = rc.box[i][0], hi = rc.box[i][1];
            *coords[i] = lo + (hi - lo) * Real(u01(rng));
        }
        if (rc.region.contains(params, p, Real(0))) return p;
    }
    throw std::logic_error("draw_in_region: sampling box misses the region");
}

} // namespace detail

// Integrates `samples` random starts drawn inside the region and reports
// every sample that leaves it (with `slack` absolute give at the boundary).
template <class Real>
inline RegionReport check_region_preserved(const SolitonParams<Real>& params,
                                           const RegionCase<Real>& rc, int samples, Real horizon,
                                           std::uint64_t seed = default_property_seed,
                                           Real slack = Real(1e-9)) {
    validate(params);
    if (samples < 1) throw std::invalid_argument("check_region_preserved: samples < 1");
    if (!(horizon > Real(0)))
        throw std::invalid_argument("check_region_preserved: horizon must be > 0");

    std::mt19937_64 rng(seed);
    std::vector<PhasePoint<Real>> starts;
    starts.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) starts.push_back(detail::draw_in_region(params, rc, rng));

    const Real t1 = rc.direction == FlowDirection::Forward ? horizon : -horizon;
    struct RunOut {
        Termination termination;
        bool exited = false;
        double exit_t = 0;
    };
    std::vector<std::future<RunOut>> futs;
    futs.reserve(starts.size());
    for (const PhasePoint<Real>& p0 : starts)
        futs.push_back(std::async(std::launch::async, [&, p0]() {
            IntegrateOptions<Real> opts;
            opts.record_dense = false;
            const Trajectory<Real> traj =
                integrate(params, AugmentedState<Real>{p0, Real(0), Real(0)}, Real(0), t1, opts);
            RunOut out{traj.termination, false, 0};
            for (const Sample<Real>& s : traj.samples)
                if (!rc.region.contains(params, s.state.p, slack)) {
                    out.exited = true;
                    out.exit_t = static_cast<double>(s.t);
                    break;
                }
            return out;
        }));

    RegionReport rep;
    rep.region = rc.region.name;
    rep.samples = samples;
    rep.seed = seed;
    for (auto& f : futs) {
        const RunOut out = f.get();
        if (out.exited) {
            ++rep.exits;
            if (!(rep.first_exit_t == rep.first_exit_t)) rep.first_exit_t = out.exit_t;
        }
        switch (out.termination) {
            case Termination::BlowupDetected: ++rep.blowups; break;
            case Termination::CollapseDetected: ++rep.collapses; break;
            case Termination::HorizonReached: ++rep.horizons; break;
            case Termination::StepUnderflow: ++rep.underflows; break;
            case Termination::EventStop: break;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Q = y / omega

template <class Real = double>
struct MonotoneReport {
    bool monotone = false;    // no rise beyond the slack
    Real max_rise = Real(0);  // largest Q(t_{k+1}) - Q(t_k), signed
    Real max_derivative_gap = Real(0); // relative mismatch of dQ/dt
    int samples = 0;
};

// Verifies that Q decreases strictly along the trajectory (in flow time)
// and that its finite-difference derivative matches -n x^2/omega - lambda
// omega. The derivative cross-check is evaluated on the dense output and
// skips samples with omega below 1e-3, where Q sits within rounding of a
// pole of the quotient.
template <class Real>
inline MonotoneReport<Real> check_Q_monotone(const Trajectory<Real>& traj,
                                             Real slack = Real(1e-12)) {
    if (traj.samples.size() < 2)
        throw std::invalid_argument("check_Q_monotone: need at least two samples");
    const Real n = Real(traj.params.n);
    const Real lambda = traj.params.lambda;

    std::vector<Sample<Real>> ordered(traj.samples.begin(), traj.samples.end());
    if (!traj.forward()) std::reverse(ordered.begin(), ordered.end());

    MonotoneReport<Real> rep;
    rep.samples = static_cast<int>(ordered.size());
    rep.max_rise = -std::numeric_limits<Real>::infinity();
    Real prev_q{};
    bool first = true;
    for (const Sample<Real>& s : ordered) {
        if (!(s.state.p.omega > Real(0)))
            throw std::invalid_argument("check_Q_monotone: omega <= 0 sample");
        const Real q = s.state.p.y / s.state.p.omega;
        if (!first) rep.max_rise = std::max(rep.max_rise, q - prev_q);
        prev_q = q;
        first = false;
    }
    rep.monotone = rep.max_rise <= slack;

    if (!traj.steps.empty()) {
        using std::abs;
        const Real h = Real(1e-4);
        const Real lo = std::min(traj.t_begin(), traj.t_end());
        const Real hi = std::max(traj.t_begin(), traj.t_end());
        for (const Sample<Real>& s : ordered) {
            const PhasePoint<Real>& p = s.state.p;
            if (p.omega < Real(1e-3)) continue;
            if (s.t - h < lo || s.t + h > hi) continue;
            const AugmentedState<Real> a = traj.sample_at(s.t - h);
            const AugmentedState<Real> b = traj.sample_at(s.t + h);
            if (!(a.p.omega > Real(0)) || !(b.p.omega > Real(0))) continue;
            const Real fd = (b.p.y / b.p.omega - a.p.y / a.p.omega) / (Real(2) * h);
            const Real formula = -n * p.x * p.x / p.omega - lambda * p.omega;
            rep.max_derivative_gap =
                std::max(rep.max_derivative_gap, abs(fd - formula) / (Real(1) + abs(formula)));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Sign propagation out of {x = 0}

struct SignPropagationReport {
    int samples = 0;
    int reached = 0;        // runs whose x crossed +1
    double max_crossing_t = 0;
    std::uint64_t seed = 0;
};

// Starts on {x = 0} with dx/dt > 0 (omega below the stationary radius, y
// nonpositive) must leave through x = 1. Each run stops at that crossing.
template <class Real>
inline SignPropagationReport check_x_sign_propagation(const SolitonParams<Real>& params,
                                                      int samples,
                                                      std::uint64_t seed = default_property_seed,
                                                      Real horizon = Real(50)) {
    validate(params);
    if (samples < 1) throw std::invalid_argument("check_x_sign_propagation: samples < 1");
    using std::sqrt;
    const Real omega_max = sqrt((Real(params.n) - Real(1)) / params.lambda);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<PhasePoint<Real>> starts;
    starts.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        const Real omega = omega_max * Real(0.98) * Real(0.05 + 0.95 * u01(rng));
        const Real y = Real(-5) * Real(u01(rng));
        starts.push_back({omega, Real(0), y});
    }

    std::vector<std::future<std::pair<bool, double>>> futs;
    futs.reserve(starts.size());
    for (const PhasePoint<Real>& p0 : starts)
        futs.push_back(std::async(std::launch::async, [&, p0]() {
            IntegrateOptions<Real> opts;
            opts.events.push_back({EventKind::XCrosses, Real(1), EventDirection::Rising, true});
            const Trajectory<Real> traj =
                integrate(params, AugmentedState<Real>{p0, Real(0), Real(0)}, Real(0), horizon,
                          opts);
            const bool hit = !traj.events.empty();
            return std::pair<bool, double>{
                hit, hit ? static_cast<double>(traj.events.front().t) : 0.0};
        }));

    SignPropagationReport rep;
    rep.samples = samples;
    rep.seed = seed;
    for (auto& f : futs) {
        const auto [hit, t] = f.get();
        if (hit) {
            ++rep.reached;
            rep.max_crossing_t = std::max(rep.max_crossing_t, t);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Completeness

enum class LengthVerdict : std::uint8_t {
    InfiniteLength,
    FiniteLengthPole,
    FiniteLengthBlowup,
    Undetermined
};

inline const char* to_string(LengthVerdict v) {
    switch (v) {
        case LengthVerdict::InfiniteLength: return "InfiniteLength";
        case LengthVerdict::FiniteLengthPole: return "FiniteLengthPole";
        case LengthVerdict::FiniteLengthBlowup: return "FiniteLengthBlowup";
        case LengthVerdict::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

template <class Real = double>
struct CompletenessVerdict {
    FlowDirection direction = FlowDirection::Forward;
    LengthVerdict verdict = LengthVerdict::Undetermined;
    Real r_estimate{}; // accumulated (plus extrapolated) length; +inf when infinite
};

namespace detail {

// Least-squares fit of 1/|x| against t on the trailing samples; the zero
// crossing estimates the escape time T, and x ~ c/(T - t) near it.
template <class Real>
struct EscapeFit {
    bool ok = false;
    Real T{};
    Real c{};
    Real residual{}; // RMS of the linear fit over the spread of 1/|x|
};

template <class Real>
inline EscapeFit<Real> fit_escape_time(const std::vector<Sample<Real>>& samples) {
    using std::abs;
    EscapeFit<Real> fit;
    auto linfit = [&](std::size_t first) {
        Real st{}, su{}, stt{}, stu{};
        const auto m = Real(samples.size() - first);
        for (std::size_t k = first; k < samples.size(); ++k) {
            const Real t = samples[k].t, u = Real(1) / abs(samples[k].state.p.x);
            st += t;
            su += u;
            stt += t * t;
            stu += t * u;
        }
        const Real det = m * stt - st * st;
        if (det == Real(0)) return std::pair<Real, Real>{Real(0), Real(0)};
        return std::pair<Real, Real>{(m * stu - st * su) / det, (stt * su - st * stu) / det};
    };

    if (samples.size() < 8) return fit;
    auto [slope, intercept] = linfit(samples.size() - std::min<std::size_t>(samples.size(), 20));
    if (!(slope < Real(0)) && !(slope > Real(0))) return fit;
    Real T = -intercept / slope;
    const Real t_last = samples.back().t;
    if (!(T > t_last) && samples.back().t >= samples.front().t) return fit;

    // Refit on the final decade before T.
    const Real gap = abs(T - t_last);
    std::size_t first = samples.size();
    while (first > 0 && abs(T - samples[first - 1].t) <= Real(10) * gap) --first;
    if (samples.size() - first < 5) first = samples.size() - std::min<std::size_t>(samples.size(), 8);
    auto [s2, q2] = linfit(first);
    if (s2 == Real(0)) return fit;
    T = -q2 / s2;

    Real lo = std::numeric_limits<Real>::infinity(), hi = -lo, rss{};
    for (std::size_t k = first; k < samples.size(); ++k) {
        const Real u = Real(1) / abs(samples[k].state.p.x);
        const Real e = u - (s2 * samples[k].t + q2);
        rss += e * e;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    using std::sqrt;
    const Real spread = hi - lo;
    fit.residual = spread > Real(0) ? sqrt(rss / Real(samples.size() - first)) / spread : Real(1);
    fit.T = T;
    fit.c = Real(1) / abs(s2);
    fit.ok = fit.residual < Real(5e-2) && abs(T) > abs(t_last) &&
             (T - t_last) * (samples.back().t - samples.front().t) > Real(0);
    return fit;
}

} // namespace detail

// Judges the length integral of the run from the growth of r: convergence
// to an equilibrium gives a finite pole-ended length, an escape in x with a
// good 1/(T-t) fit gives a finite blow-up-ended length, and r passing the
// bound with non-decaying increments is taken as infinite length.
template <class Real>
inline CompletenessVerdict<Real> estimate_completeness(const Trajectory<Real>& traj,
                                                       FlowDirection direction,
                                                       Real bound = Real(1e3),
                                                       Real rho = Real(1e-4)) {
    using std::abs;
    if (traj.samples.size() < 2)
        return {direction, LengthVerdict::Undetermined, Real(0)};
    CompletenessVerdict<Real> out;
    out.direction = direction;

    const Real length = abs(traj.samples.back().state.r - traj.samples.front().state.r);
    out.r_estimate = length;

    const Real span = abs(traj.t_end() - traj.t_begin());
    const Real w = span / Real(5);
    const Real sgn = traj.forward() ? Real(1) : Real(-1);
    const Real t_last = traj.t_end();
    const Real a = abs(traj.sample_at(t_last - sgn * w).r - traj.sample_at(t_last - sgn * Real(2) * w).r);
    const Real b = abs(traj.samples.back().state.r - traj.sample_at(t_last - sgn * w).r);

    const PhasePoint<Real>& end = traj.samples.back().state.p;
    auto dist = [&](const PhasePoint<Real>& q) {
        using std::sqrt;
        const Real dw = end.omega - q.omega, dx = end.x - q.x, dy = end.y - q.y;
        return sqrt(dw * dw + dx * dx + dy * dy);
    };
    const bool near_eq = dist(equilibrium_P0(traj.params)) <= rho ||
                         dist(equilibrium_P1(traj.params)) <= rho;
    const bool decaying = b <= Real(0.9) * a || b <= Real(1e-6) * std::max(Real(1), length);

    if (near_eq && decaying) {
        out.verdict = LengthVerdict::FiniteLengthPole;
        return out;
    }
    if (traj.termination == Termination::BlowupDetected) {
        const auto fit = detail::fit_escape_time(traj.samples);
        if (fit.ok) {
            // omega <= K (T-t)^{-4/5} with K from the last sample makes the
            // remaining tail of the length integral at most 5 K gap^{1/5}
            // = 5 omega_end gap.
            const Real gap = abs(fit.T - t_last);
            out.verdict = LengthVerdict::FiniteLengthBlowup;
            out.r_estimate = length + Real(5) * end.omega * gap;
        }
        return out;
    }
    if (length >= bound && b >= Real(0.45) * a) {
        out.verdict = LengthVerdict::InfiniteLength;
        out.r_estimate = std::numeric_limits<Real>::infinity();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Blow-up rate bounds

template <class Real = double>
struct EscapeRateReport {
    bool determined = false;
    Real T{};          // fitted escape time
    Real c{};          // |x| ~ c/(T - t)
    Real exponent{};   // log-log slope of |x| against (T - t)
    Real max_x_gap{};  // max |x| (T - t) over the final decade
    Real max_omega_scaled{}; // max omega (T - t)^{4/5} over the final decade
    Real r_final{};
    Real fit_residual{};
};

// Bounds the escape rate of a run that ended in BlowupDetected: |x| stays
// below ~(4/5)/(T-t) and omega below C/(T-t)^{4/5} on the final decade
// before the fitted escape time.
template <class Real>
inline EscapeRateReport<Real> check_blowup_bound(const Trajectory<Real>& traj) {
    using std::abs;
    using std::log;
    using std::pow;
    if (traj.termination != Termination::BlowupDetected)
        throw std::invalid_argument("check_blowup_bound: trajectory did not end in blow-up");

    EscapeRateReport<Real> rep;
    rep.r_final = traj.samples.back().state.r;
    const auto fit = detail::fit_escape_time(traj.samples);
    rep.fit_residual = fit.residual;
    if (!fit.ok) return rep;
    rep.determined = true;
    rep.T = fit.T;
    rep.c = fit.c;

    const Real gap_end = abs(fit.T - traj.t_end());
    Real slxx{}, slg{}, slxg{}, slgg{};
    int m = 0;
    for (const Sample<Real>& s : traj.samples) {
        const Real gap = abs(fit.T - s.t);
        if (gap > Real(10) * gap_end) continue;
        const Real ax = abs(s.state.p.x);
        rep.max_x_gap = std::max(rep.max_x_gap, ax * gap);
        rep.max_omega_scaled =
            std::max(rep.max_omega_scaled, s.state.p.omega * pow(gap, Real(0.8)));
        const Real lg = log(gap), lx = log(ax);
        slg += lg;
        slxx += lx;
        slgg += lg * lg;
        slxg += lg * lx;
        ++m;
    }
    if (m >= 3) {
        const Real det = Real(m) * slgg - slg * slg;
        if (det != Real(0)) rep.exponent = (Real(m) * slxg - slg * slxx) / det;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// y divergence on x-bounded complete runs

template <class Real = double>
struct DivergenceReport {
    bool x_bounded = false; // |x| < 1 on every sample
    Real y_final{};
    bool below_threshold = false;
};

template <class Real>
inline DivergenceReport<Real> check_y_divergence(const Trajectory<Real>& traj,
                                                 Real threshold = Real(-50)) {
    using std::abs;
    DivergenceReport<Real> rep;
    rep.x_bounded = true;
    for (const Sample<Real>& s : traj.samples)
        if (!(abs(s.state.p.x) < Real(1))) {
            rep.x_bounded = false;
            break;
        }
    rep.y_final = traj.samples.back().state.p.y;
    rep.below_threshold = rep.y_final <= threshold;
    return rep;
}

// Largest x over the final `window` of flow time; complete forward runs
// cannot keep x pinned below a negative level arbitrarily long, so this
// staying above -0.05 is the finite-horizon stand-in for that claim.
template <class Real>
inline Real late_x_max(const Trajectory<Real>& traj, Real window = Real(1)) {
    Real out = -std::numeric_limits<Real>::infinity();
    const Real t1 = traj.t_end();
    const Real sgn = traj.forward() ? Real(1) : Real(-1);
    for (const Sample<Real>& s : traj.samples)
        if (sgn * (t1 - s.t) <= window) out = std::max(out, s.state.p.x);
    return out;
}

// ---------------------------------------------------------------------------
// Invariant loci {x = c, dx/dt = 0}

// Start on the invariant locus with x = c. For c = 0 the stationary radius
// fixes omega and `aux` picks y; for c = +-1 `aux` picks omega and y is
// c (n - lambda omega^2).
template <class Real>
inline PhasePoint<Real> locus_start(const SolitonParams<Real>& params, int c, Real aux) {
    validate(params);
    using std::sqrt;
    const Real n = Real(params.n);
    if (c == 0) return {sqrt((n - Real(1)) / params.lambda), Real(0), aux};
    if (c == 1 || c == -1) {
        if (!(aux > Real(0))) throw std::domain_error("locus_start: omega must be > 0");
        return {aux, Real(c), Real(c) * (n - params.lambda * aux * aux)};
    }
    throw std::domain_error("locus_start: c must be -1, 0, or 1");
}

template <class Real = double>
struct LocusReport {
    Real max_x_deviation{};     // sup |x - c|
    Real max_locus_deviation{}; // sup of the second locus coordinate's drift
};

// Integrates from locus_start(params, c, aux) and reports the drift off the
// locus: |x - c| plus |y - c(n - lambda omega^2)| for c = +-1, or |omega -
// omega_0| for c = 0.
template <class Real>
inline LocusReport<Real> check_invariant_locus(const SolitonParams<Real>& params, int c, Real aux,
                                               Real horizon = Real(5),
                                               Tolerances<Real> tol = {}) {
    using std::abs;
    using std::sqrt;
    const PhasePoint<Real> p0 = locus_start(params, c, aux);
    IntegrateOptions<Real> opts;
    opts.tol = tol;
    opts.record_dense = false;
    const Trajectory<Real> traj =
        integrate(params, AugmentedState<Real>{p0, Real(0), Real(0)}, Real(0), horizon, opts);
    const Real n = Real(params.n);
    LocusReport<Real> rep;
    for (const Sample<Real>& s : traj.samples) {
        const PhasePoint<Real>& p = s.state.p;
        rep.max_x_deviation = std::max(rep.max_x_deviation, abs(p.x - Real(c)));
        const Real second = c == 0
                                ? abs(p.omega - p0.omega)
                                : abs(p.y - Real(c) * (n - params.lambda * p.omega * p.omega));
        rep.max_locus_deviation = std::max(rep.max_locus_deviation, second);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Classification

enum class TrajectoryTag : std::uint8_t {
    RoundSphere,
    GaussianFlat,
    ReversedGaussian,
    Cylinder,
    IncompleteBlowup,
    IncompleteCollapse,
    Undetermined
};

inline const char* to_string(TrajectoryTag tag) {
    switch (tag) {
        case TrajectoryTag::RoundSphere: return "RoundSphere";
        case TrajectoryTag::GaussianFlat: return "GaussianFlat";
        case TrajectoryTag::ReversedGaussian: return "ReversedGaussian";
        case TrajectoryTag::Cylinder: return "Cylinder";
        case TrajectoryTag::IncompleteBlowup: return "IncompleteBlowup";
        case TrajectoryTag::IncompleteCollapse: return "IncompleteCollapse";
        case TrajectoryTag::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

// How tags transform under the symmetry L composed with time reversal.
inline TrajectoryTag reflected_tag(TrajectoryTag tag) {
    switch (tag) {
        case TrajectoryTag::GaussianFlat: return TrajectoryTag::ReversedGaussian;
        case TrajectoryTag::ReversedGaussian: return TrajectoryTag::GaussianFlat;
        default: return tag;
    }
}

struct Classification {
    TrajectoryTag tag = TrajectoryTag::Undetermined;
    std::vector<std::pair<std::string, double>> evidence;
};

template <class Real = double>
struct ClassifyOptions {
    Real line_tol = Real(1e-4);        // sup-distance to the stationary line
    Real flat_tol = Real(1e-4);        // sup of |x -+ 1|
    Real rho = Real(1e-4);             // equilibrium approach radius
    Real curvature_floor = Real(1e-3); // skip curvature checks below this omega
};

// Decision tree over a run integrated both ways from one start. Checks are
// ordered (line, then x = +-1, then the connecting orbit, then incomplete
// endings); the loci are mutually exclusive at tolerance, the fixed order
// just removes ambiguity at the crossover scales.
template <class Real>
inline Classification classify(const Trajectory<Real>& fwd, const Trajectory<Real>& bwd,
                               const ClassifyOptions<Real>& opts = {}) {
    using std::abs;
    using std::sqrt;
    if (fwd.samples.empty() || bwd.samples.empty())
        throw std::invalid_argument("classify: empty trajectory");
    const SolitonParams<Real>& params = fwd.params;
    const Real n = Real(params.n);

    const Real omega_line = sqrt((n - Real(1)) / params.lambda);
    Real d_line{}, d_flat{}, d_rflat{};
    Real min_nu1 = std::numeric_limits<Real>::infinity(), min_nu2 = min_nu1;
    auto scan = [&](const Trajectory<Real>& traj) {
        for (const Sample<Real>& s : traj.samples) {
            const PhasePoint<Real>& p = s.state.p;
            const Real dw = p.omega - omega_line;
            d_line = std::max(d_line, sqrt(dw * dw + p.x * p.x));
            d_flat = std::max(d_flat, abs(p.x - Real(1)));
            d_rflat = std::max(d_rflat, abs(p.x + Real(1)));
            if (p.omega >= opts.curvature_floor) {
                const Curvatures<Real> nu = sectional_curvatures(params, p);
                min_nu1 = std::min(min_nu1, nu.nu1);
                min_nu2 = std::min(min_nu2, nu.nu2);
            }
        }
    };
    scan(fwd);
    scan(bwd);

    Classification out;
    auto ev = [&](const char* k, Real v) { out.evidence.emplace_back(k, static_cast<double>(v)); };

    if (d_line < opts.line_tol) {
        out.tag = TrajectoryTag::Cylinder;
        ev("line_distance", d_line);
        return out;
    }
    if (d_flat < opts.flat_tol) {
        out.tag = TrajectoryTag::GaussianFlat;
        ev("flat_distance", d_flat);
        return out;
    }
    if (d_rflat < opts.flat_tol) {
        out.tag = TrajectoryTag::ReversedGaussian;
        ev("flat_distance", d_rflat);
        return out;
    }

    auto dist_to = [&](const PhasePoint<Real>& a, const PhasePoint<Real>& b) {
        const Real dw = a.omega - b.omega, dx = a.x - b.x, dy = a.y - b.y;
        return sqrt(dw * dw + dx * dx + dy * dy);
    };
    const PhasePoint<Real> P0 = equilibrium_P0(params), P1 = equilibrium_P1(params);
    const PhasePoint<Real>& ef = fwd.samples.back().state.p;
    const PhasePoint<Real>& eb = bwd.samples.back().state.p;
    const Real pairing = std::min(std::max(dist_to(ef, P1), dist_to(eb, P0)),
                                  std::max(dist_to(ef, P0), dist_to(eb, P1)));
    if (pairing <= opts.rho && min_nu1 > Real(0) && min_nu2 > Real(0)) {
        out.tag = TrajectoryTag::RoundSphere;
        ev("end_distance", pairing);
        ev("min_nu1", min_nu1);
        ev("min_nu2", min_nu2);
        return out;
    }

    const bool fwd_blow = fwd.termination == Termination::BlowupDetected;
    const bool bwd_blow = bwd.termination == Termination::BlowupDetected;
    if (fwd_blow || bwd_blow) {
        out.tag = TrajectoryTag::IncompleteBlowup;
        ev("blowup_forward", fwd_blow ? 1 : 0);
        ev("blowup_backward", bwd_blow ? 1 : 0);
        ev("r_final", (fwd_blow ? fwd : bwd).samples.back().state.r);
        return out;
    }
    const bool fwd_coll = fwd.termination == Termination::CollapseDetected;
    const bool bwd_coll = bwd.termination == Termination::CollapseDetected;
    if (fwd_coll || bwd_coll) {
        out.tag = TrajectoryTag::IncompleteCollapse;
        ev("collapse_forward", fwd_coll ? 1 : 0);
        ev("collapse_backward", bwd_coll ? 1 : 0);
        ev("r_final", (fwd_coll ? fwd : bwd).samples.back().state.r);
        return out;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep over the seed circle

template <class Real = double>
struct SweepOptions {
    Real horizon_forward = Real(60);
    Real horizon_backward = Real(8);
    Tolerances<Real> tol{};
    ClassifyOptions<Real> classify{};
};

// Seeds along theta in [theta_lo, theta_hi], integrates each both ways, and
// classifies. Runs execute concurrently; the result is ordered by theta.
template <class Real>
inline std::vector<std::pair<Real, Classification>>
sweep_unstable(const SolitonParams<Real>& params, Real theta_lo, Real theta_hi, int count,
               Real delta, const SweepOptions<Real>& opts = {}) {
    validate(params);
    if (count < 2) throw std::invalid_argument("sweep_unstable: count must be >= 2");
    if (!(theta_hi >= theta_lo))
        throw std::invalid_argument("sweep_unstable: empty theta range");

    std::vector<Real> thetas(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        thetas[static_cast<std::size_t>(i)] =
            theta_lo + (theta_hi - theta_lo) * Real(i) / Real(count - 1);

    std::vector<std::future<Classification>> futs;
    futs.reserve(thetas.size());
    for (const Real theta : thetas)
        futs.push_back(std::async(std::launch::async, [&, theta]() {
            const PhasePoint<Real> seed = unstable_seed(params, theta, delta);
            IntegrateOptions<Real> io;
            io.tol = opts.tol;
            io.record_dense = false;
            const AugmentedState<Real> a0{seed, Real(0), Real(0)};
            const Trajectory<Real> fwd =
                integrate(params, a0, Real(0), opts.horizon_forward, io);
            const Trajectory<Real> bwd =
                integrate(params, a0, Real(0), -opts.horizon_backward, io);
            return classify(fwd, bwd, opts.classify);
        }));

    std::vector<std::pair<Real, Classification>> out;
    out.reserve(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) out.emplace_back(thetas[i], futs[i].get());
    return out;
}

// ---------------------------------------------------------------------------
// Connecting-orbit bisection

// Leading-order angle (in the unstable_seed parameterization) at which the
// orbit joining the two saddles leaves the seed circle of radius delta.
// The relative error is O(delta): measured 6e-9 at delta = 1e-6 and 1.3e-5
// at delta = 1e-5 for n = 2, lambda = 1.
template <class Real>
inline Real heteroclinic_angle_hint(const SolitonParams<Real>& params, Real delta) {
    validate(params);
    using std::sqrt;
    const Real n = Real(params.n);
    return sqrt(Real(1) + n * n) * params.lambda * (n - Real(1)) * delta /
           (Real(2) * n * (n + Real(1)));
}

// Leading-order angle of the separatrix along which x stays at 1; seeds
// between the two hints run to a cone-type end, seeds outside escape with
// x -> +infinity.
template <class Real>
inline Real flat_angle_hint(const SolitonParams<Real>& params, Real delta) {
    validate(params);
    using std::sqrt;
    const Real n = Real(params.n);
    return sqrt(Real(1) + n * n) * params.lambda * delta / (n + Real(1));
}

// Bracket straddling only the connecting orbit's angle: the lower end sits
// in the escape fan, the upper end halfway toward the flat separatrix.
// (A symmetric bracket like 3x the hint would cross the flat separatrix
// for n >= 3 and classify alike on both ends.)
template <class Real>
inline std::pair<Real, Real> default_bisect_bracket(const SolitonParams<Real>& params,
                                                    Real delta) {
    const Real hint = heteroclinic_angle_hint(params, delta);
    return {hint / Real(2), (hint + flat_angle_hint(params, delta)) / Real(2)};
}

template <class Real = double>
struct BisectOptions {
    Real delta = Real(1e-6);
    Real rho = Real(1e-4);     // stop radius around P1 for the returned orbit
    Real horizon = Real(300);
    // Bracket width to bisect down to. The far saddle expands at rate n - 1,
    // so larger n needs a tighter bracket for the same approach: 1e-15
    // reaches ~3e-5 of the saddle at n = 2 but needs ~1e-18 at n = 3.
    Real width = Real(1e-15);
    Real rtol = Real(1e-13);
    Real atol = Real(1e-18);
};

template <class Real = double>
struct BisectResult {
    Real theta_star{};
    Trajectory<Real> orbit;
    int iterations = 0;
};

namespace detail {

template <class To, class From>
inline Trajectory<To> convert_trajectory(const Trajectory<From>& in) {
    Trajectory<To> out;
    out.params = {in.params.n, static_cast<To>(in.params.lambda), in.params.steady};
    out.termination = in.termination;
    out.samples.reserve(in.samples.size());
    for (const Sample<From>& s : in.samples)
        out.samples.push_back({static_cast<To>(s.t),
                               {{static_cast<To>(s.state.p.omega), static_cast<To>(s.state.p.x),
                                 static_cast<To>(s.state.p.y)},
                                static_cast<To>(s.state.r), static_cast<To>(s.state.f)}});
    out.events.reserve(in.events.size());
    for (const EventHit<From>& e : in.events)
        out.events.push_back({static_cast<To>(e.t),
                              {e.spec.kind, static_cast<To>(e.spec.threshold), e.spec.direction,
                               e.spec.stop},
                              {{static_cast<To>(e.state.p.omega), static_cast<To>(e.state.p.x),
                                static_cast<To>(e.state.p.y)},
                               static_cast<To>(e.state.r), static_cast<To>(e.state.f)}});
    out.steps.reserve(in.steps.size());
    for (const DenseStep<From>& d : in.steps) {
        DenseStep<To> o;
        o.t0 = static_cast<To>(d.t0);
        o.dt = static_cast<To>(d.dt);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) o.rcont[i][j] = static_cast<To>(d.rcont[i][j]);
        out.steps.push_back(o);
    }
    return out;
}

} // namespace detail

// Bisects theta between a shot that escapes with x -> +infinity and one
// that crosses to the x < 0 side, converging on the orbit that joins the
// two saddles. Shots are integrated in extended precision: the seed
// coordinates quantize at machine epsilon, and in double that quantization
// alone decoheres the approach at about 1e-2 from the far saddle. A shot's
// side is the sign of x at termination; which guard fires first (the omega
// floor or the |x| ceiling) varies with n, the sign does not.
template <class Real>
inline BisectResult<Real> bisect_heteroclinic(const SolitonParams<Real>& params, Real theta_lo,
                                              Real theta_hi, int iters = 60,
                                              const BisectOptions<Real>& opts = {}) {
    validate(params);
    if (iters < 1) throw std::invalid_argument("bisect_heteroclinic: iters must be >= 1");
    if (!(theta_hi > theta_lo))
        throw std::invalid_argument("bisect_heteroclinic: empty theta bracket");

    const SolitonParams<quad> qp{params.n, static_cast<quad>(params.lambda), params.steady};
    const quad qdelta = static_cast<quad>(opts.delta);
    const quad horizon = static_cast<quad>(opts.horizon);
    IntegrateOptions<quad> shot_opts;
    shot_opts.tol = {static_cast<quad>(opts.rtol), static_cast<quad>(opts.atol)};
    shot_opts.record_dense = false;

    auto escapes_positive = [&](quad theta) {
        const PhasePoint<quad> seed = unstable_seed(qp, theta, qdelta);
        const Trajectory<quad> traj =
            integrate(qp, AugmentedState<quad>{seed, quad(0), quad(0)}, quad(0), horizon,
                      shot_opts);
        return traj.samples.back().state.p.x > quad(0);
    };

    quad lo = static_cast<quad>(theta_lo), hi = static_cast<quad>(theta_hi);
    const bool side_lo = escapes_positive(lo);
    if (side_lo == escapes_positive(hi))
        throw std::invalid_argument("bisect_heteroclinic: endpoints classify alike");

    BisectResult<Real> result;
    const quad width = static_cast<quad>(opts.width);
    while (result.iterations < iters && hi - lo > width) {
        const quad mid = (lo + hi) / 2;
        if (escapes_positive(mid) == side_lo)
            lo = mid;
        else
            hi = mid;
        ++result.iterations;
    }

    const quad theta_star = (lo + hi) / 2;
    IntegrateOptions<quad> final_opts = shot_opts;
    final_opts.record_dense = true;
    final_opts.events.push_back(
        {EventKind::ProximityP1, static_cast<quad>(opts.rho), EventDirection::Falling, true});
    const PhasePoint<quad> seed = unstable_seed(qp, theta_star, qdelta);
    const Trajectory<quad> orbit =
        integrate(qp, AugmentedState<quad>{seed, quad(0), quad(0)}, quad(0), horizon,
                  final_opts);

    result.theta_star = static_cast<Real>(theta_star);
    result.orbit = detail::convert_trajectory<Real>(orbit);
    return result;
}

} // namespace shrinksol
