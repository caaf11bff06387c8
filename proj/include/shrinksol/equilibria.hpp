#pragma once

// Equilibria of the phase system and eigen-structure of its linearization.
//
// The field vanishes exactly at P0 = (0, 1, n) and P1 = (0, -1, -n). The
// Jacobian there block-decouples into the omega direction plus a 2x2 block
// in (x, y), so the eigen-decomposition is closed-form:
//
//   at P0:  2 -> (0, 1, -n),   1 -> (1, 0, 0),   1-n -> (0, 1, 1)
//   at P1:  the Jacobian is the negative of the one at P0, same eigenvectors,
//           negated eigenvalues.
//
// Seeding helpers place shooting starts on the unstable subspace of P0 (and,
// via reflection, the stable subspace of P1).

#include <cmath>
#include <utility>

#include "phase.hpp"

namespace shrinksol {

template <class Real = double>
struct EigenPair {
    Real value;
    std::array<Real, 3> vector; // unit length
};

template <class Real = double>
struct EquilibriumData {
    PhasePoint<Real> point;
    Matrix3<Real> jac;
    std::array<EigenPair<Real>, 3> eigen; // sorted by eigenvalue, descending
};

template <class Real>
inline PhasePoint<Real> equilibrium_P0(const SolitonParams<Real>& params) {
    return {Real(0), Real(1), Real(params.n)};
}

template <class Real>
inline PhasePoint<Real> equilibrium_P1(const SolitonParams<Real>& params) {
    return {Real(0), Real(-1), Real(-params.n)};
}

template <class Real>
inline std::pair<EquilibriumData<Real>, EquilibriumData<Real>>
equilibrium_points(const SolitonParams<Real>& params) {
    validate(params);
    using std::sqrt;
    const Real n = Real(params.n);
    const Real inv_norm = Real(1) / sqrt(Real(1) + n * n);
    const Real inv_sqrt2 = Real(1) / sqrt(Real(2));

    const std::array<Real, 3> fast{Real(0), inv_norm, -n * inv_norm}; // eigenvalue 2 at P0
    const std::array<Real, 3> axis{Real(1), Real(0), Real(0)};        // eigenvalue 1 at P0
    const std::array<Real, 3> slow{Real(0), inv_sqrt2, inv_sqrt2};    // eigenvalue 1-n at P0

    EquilibriumData<Real> at_P0{
        equilibrium_P0(params),
        jacobian(params, equilibrium_P0(params)),
        {{{Real(2), fast}, {Real(1), axis}, {Real(1) - n, slow}}}};

    EquilibriumData<Real> at_P1{
        equilibrium_P1(params),
        jacobian(params, equilibrium_P1(params)),
        {{{n - Real(1), slow}, {Real(-1), axis}, {Real(-2), fast}}}};

    return {at_P0, at_P1};
}

// Start for a forward shot along the unstable subspace of P0:
//   P0 + delta (cos(theta) u1 + sin(theta) u2),
// u1 = (1,0,0), u2 = (0,1,-n)/sqrt(1+n^2). The stable component is zero at
// the seed and only shrinks forward, so small delta places the start on the
// unstable manifold to O(delta^2).
template <class Real>
inline PhasePoint<Real> unstable_seed(const SolitonParams<Real>& params, Real theta, Real delta) {
    validate(params);
    using std::cos;
    using std::isfinite;
    using std::sin;
    using std::sqrt;
    if (!isfinite(theta) || !(theta > Real(-3.1415926535897932385L)) ||
        !(theta <= Real(3.1415926535897932385L)))
        throw std::domain_error("unstable_seed: theta outside (-pi, pi]");
    if (!(delta > Real(0)) || !(delta <= Real(1e-4)))
        throw std::domain_error("unstable_seed: delta outside (0, 1e-4]");
    const Real n = Real(params.n);
    const Real c = cos(theta), s = sin(theta);
    const Real inv_norm = Real(1) / sqrt(Real(1) + n * n);
    PhasePoint<Real> seed{delta * c, Real(1) + delta * s * inv_norm,
                          n - delta * s * n * inv_norm};
    if (seed.omega < Real(0) && !params.steady)
        throw std::domain_error("unstable_seed: omega < 0 requires the steady plane");
    return seed;
}

// Start for a backward shot toward P1; the reflection maps the unstable
// manifold of P0 onto the stable manifold of P1.
template <class Real>
inline PhasePoint<Real> stable_seed(const SolitonParams<Real>& params, Real theta, Real delta) {
    return reflect(unstable_seed(params, theta, delta));
}

} // namespace shrinksol
