#pragma once

// Core types and the vector field of the rotationally symmetric shrinking
// soliton system in phase coordinates (omega, x, y), where x = omega' and
// y = n*omega' - omega*f', with flow parameter t defined by dt = dr/omega:
//
//   d(omega)/dt = x*omega
//   dx/dt       = x^2 - x*y + n - 1 - lambda*omega^2
//   dy/dt       = x*y - n*x^2 - lambda*omega^2
//
// All quantities are dimensionless. Everything here is a pure function of
// its inputs and safe to call concurrently.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace shrinksol {

template <class Real = double>
struct SolitonParams {
    int n = 2;             // dimension of the sphere fiber, n >= 2
    Real lambda = Real(1); // shrinking constant, > 0
    bool steady = false;   // admits the invariant plane {omega = 0}
};

template <class Real>
inline void validate(const SolitonParams<Real>& params) {
    using std::isfinite;
    if (params.n < 2)
        throw std::domain_error("SolitonParams: n must be >= 2");
    if (!(params.lambda > Real(0)) || !isfinite(params.lambda))
        throw std::domain_error("SolitonParams: lambda must be finite and > 0");
}

template <class Real = double>
struct PhasePoint {
    Real omega{};
    Real x{};
    Real y{};
};

template <class Real = double>
struct Velocity {
    Real d_omega{};
    Real d_x{};
    Real d_y{};
};

template <class Real>
inline bool finite(const PhasePoint<Real>& p) {
    using std::isfinite;
    return isfinite(p.omega) && isfinite(p.x) && isfinite(p.y);
}

// Right-hand side without input checking; the integrator's inner loop
// calls this directly.
template <class Real>
inline Velocity<Real> phi_unchecked(const SolitonParams<Real>& params,
                                    const PhasePoint<Real>& p) noexcept {
    const Real n = Real(params.n);
    const Real lw2 = params.lambda * p.omega * p.omega;
    return {p.x * p.omega,
            p.x * p.x - p.x * p.y + n - Real(1) - lw2,
            p.x * p.y - n * p.x * p.x - lw2};
}

template <class Real>
inline Velocity<Real> phi(const SolitonParams<Real>& params, const PhasePoint<Real>& p) {
    validate(params);
    if (!finite(p)) throw std::domain_error("phi: non-finite phase point");
    return phi_unchecked(params, p);
}

// Rows ordered (omega, x, y).
template <class Real>
using Matrix3 = std::array<std::array<Real, 3>, 3>;

template <class Real>
inline Matrix3<Real> jacobian(const SolitonParams<Real>& params, const PhasePoint<Real>& p) {
    validate(params);
    if (!finite(p)) throw std::domain_error("jacobian: non-finite phase point");
    const Real n = Real(params.n);
    const Real tlw = Real(2) * params.lambda * p.omega;
    return {{{p.x, p.omega, Real(0)},
             {-tlw, Real(2) * p.x - p.y, -p.x},
             {-tlw, p.y - Real(2) * n * p.x, p.x}}};
}

// Second t-derivative of x along the flow:
//   x'' = (n-1) x (x^2 - 1) + (3x - y) x'
template <class Real>
inline Real x_accel(const SolitonParams<Real>& params, const PhasePoint<Real>& p) {
    const Real n = Real(params.n);
    const Real dx = phi(params, p).d_x;
    return (n - Real(1)) * p.x * (p.x * p.x - Real(1)) + (Real(3) * p.x - p.y) * dx;
}

// Third t-derivative of x along the flow:
//   x''' = 2x[(2n-1)x - y] x' + 2(x')^2 + (3x - y) x''
template <class Real>
inline Real x_jerk(const SolitonParams<Real>& params, const PhasePoint<Real>& p) {
    const Real n = Real(params.n);
    const Real dx = phi(params, p).d_x;
    const Real ddx = x_accel(params, p);
    return Real(2) * p.x * ((Real(2) * n - Real(1)) * p.x - p.y) * dx +
           Real(2) * dx * dx + (Real(3) * p.x - p.y) * ddx;
}

// The symmetry L(omega, x, y) = (omega, -x, -y). Composed with time
// reversal it maps solutions to solutions: phi(reflect(p)) equals
// -reflect_velocity(phi(p)).
template <class Real>
inline PhasePoint<Real> reflect(const PhasePoint<Real>& p) {
    return {p.omega, -p.x, -p.y};
}

template <class Real>
inline Velocity<Real> reflect_velocity(const Velocity<Real>& v) {
    return {v.d_omega, -v.d_x, -v.d_y};
}

// Field on the invariant plane {omega = 0}, where the lambda*omega^2 terms
// vanish identically and the (x, y) dynamics are those of the steady system.
template <class Real>
inline Velocity<Real> steady_field(const SolitonParams<Real>& params, const PhasePoint<Real>& p) {
    if (!finite(p)) throw std::domain_error("steady_field: non-finite phase point");
    if (p.omega != Real(0))
        throw std::domain_error("steady_field: point must lie in the plane {omega = 0}");
    const Real n = Real(params.n);
    return {Real(0),
            p.x * p.x - p.x * p.y + n - Real(1),
            p.x * p.y - n * p.x * p.x};
}

// Conjunctions of closed half-space conditions on (omega, x, y, dx/dt).
// This covers every flow-invariant region used by the verification suite,
// e.g. {x >= 1 and dx/dt >= 0}.
enum class Coord : std::uint8_t { Omega, X, Y, DxDt };
enum class Rel : std::uint8_t { Ge, Le };

template <class Real = double>
struct RegionAtom {
    Coord coord;
    Rel rel;
    Real bound;
};

template <class Real = double>
struct Region {
    std::string name;
    std::vector<RegionAtom<Real>> atoms;

    bool contains(const SolitonParams<Real>& params, const PhasePoint<Real>& p,
                  Real slack = Real(0)) const {
        const Velocity<Real> v = phi_unchecked(params, p);
        for (const auto& a : atoms) {
            Real value{};
            switch (a.coord) {
                case Coord::Omega: value = p.omega; break;
                case Coord::X: value = p.x; break;
                case Coord::Y: value = p.y; break;
                case Coord::DxDt: value = v.d_x; break;
            }
            if (a.rel == Rel::Ge ? value < a.bound - slack : value > a.bound + slack)
                return false;
        }
        return true;
    }
};

} // namespace shrinksol
