#include <catch2/catch_amalgamated.hpp>

#include <shrinksol/reconstruct.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace shrinksol;

namespace {

const SolitonParams<> n2{2, 1.0};

AugmentedState<> start(double w, double x, double y) { return {{w, x, y}, 0.0, 0.0}; }

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double u : v) m = std::max(m, std::abs(u));
    return m;
}

} // namespace

TEST_CASE("sphere profile matches the constant curvature closed form", "[reconstruct]") {
    // Start at the waist: omega(r) = sqrt(2)*cos(r/sqrt(2)), f constant.
    auto traj = integrate(n2, start(std::sqrt(2.0), 0, 0), 0.0, 6.0);
    auto prof = reconstruct_profile(n2, traj);
    REQUIRE(prof.size() >= 5);
    for (std::size_t i = 0; i < prof.size(); ++i) {
        REQUIRE(std::abs(prof.omega[i] - std::sqrt(2.0) * std::cos(prof.r[i] / std::sqrt(2.0))) < 1e-6);
        REQUIRE(std::abs(prof.f[i]) < 1e-6);
        REQUIRE(std::abs(prof.nu1[i] - 0.5) < 1e-4);
        REQUIRE(std::abs(prof.nu2[i] - 0.5) < 1e-4);
    }
}

TEST_CASE("expanding plane profile is the cone omega = r with quadratic potential", "[reconstruct]") {
    // omega = e^t = 1 + r, f = r^2/2 + r with f anchored to 0 at r = 0.
    auto traj = integrate(n2, start(1, 1, 1), 0.0, 1.6);
    auto prof = reconstruct_profile(n2, traj);
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double r = prof.r[i];
        REQUIRE(std::abs(prof.omega[i] - (1.0 + r)) < 1e-6);
        REQUIRE(std::abs(prof.f[i] - (r * r / 2 + r)) < 1e-6);
        REQUIRE(std::abs(prof.nu1[i]) < 1e-5);
        REQUIRE(std::abs(prof.nu2[i]) < 1e-5);
    }
}

TEST_CASE("cylinder profile has constant waist and quadratic potential", "[reconstruct]") {
    const SolitonParams<> n3{3, 1.0};
    auto traj = integrate(n3, start(std::sqrt(2.0), 0, 0), 0.0, 5.0);
    auto prof = reconstruct_profile(n3, traj);
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double r = prof.r[i];
        REQUIRE(std::abs(prof.omega[i] - std::sqrt(2.0)) < 1e-8);
        // f = (n-1) r^2 / (2 omega0^2) = r^2/2 for omega0^2 = 2.
        REQUIRE(std::abs(prof.f[i] - r * r / 2) < 1e-6);
    }
}

TEST_CASE("profile handles backward trajectories and anchoring", "[reconstruct]") {
    auto traj = integrate(n2, start(1, 0, 0), 0.0, -3.0);
    auto prof = reconstruct_profile(n2, traj, 10.0);
    REQUIRE(std::is_sorted(prof.r.begin(), prof.r.end()));
    // The trajectory's first sample (t=0) anchors r and f; it lands at the
    // high-r end of the grid after reversal.
    REQUIRE(std::abs(prof.r.back() - 10.0) < 1e-12);
    REQUIRE(std::abs(prof.r.front() - 7.0) < 1e-8);
    REQUIRE(std::abs(prof.f.back()) < 1e-12);
}

TEST_CASE("profile rejects nonpositive omega", "[reconstruct]") {
    SolitonParams<> steady{2, 1.0, true};
    AugmentedState<> in_plane{{0.0, 1.5, -1.0}, 0.0, 0.0};
    auto traj = integrate(steady, in_plane, 0.0, 0.5);
    REQUIRE_THROWS_AS(reconstruct_profile(steady, traj), std::domain_error);
}

TEST_CASE("sectional curvature closed values", "[reconstruct]") {
    auto flat = sectional_curvatures(n2, {1.0, 1.0, 1.0});
    REQUIRE(flat.nu1 == 0.0);
    REQUIRE(flat.nu2 == 0.0);

    auto cyl = sectional_curvatures(n2, {1.0, 0.0, -3.7});
    REQUIRE(cyl.nu1 == 0.0);
    REQUIRE(cyl.nu2 == 1.0);

    // Any point of the locus {y = nx, nx^2 + lambda omega^2 = n} has both
    // curvatures equal to lambda/n.
    for (int n = 2; n <= 6; ++n) {
        for (double lam : {0.25, 1.0, 4.0}) {
            SolitonParams<> P{n, lam};
            for (double x : {-0.9, -0.3, 0.0, 0.4, 0.8}) {
                const double w = std::sqrt(n * (1 - x * x) / lam);
                auto c = sectional_curvatures(P, {w, x, n * x});
                REQUIRE(std::abs(c.nu1 - lam / n) < 1e-12);
                REQUIRE(std::abs(c.nu2 - lam / n) < 1e-12);
            }
        }
    }

    REQUIRE_THROWS_AS(sectional_curvatures(n2, {0.0, 1.0, 2.0}), std::domain_error);
    REQUIRE_THROWS_AS(sectional_curvatures(n2, {-1.0, 0.0, 0.0}), std::domain_error);
}

TEST_CASE("centered difference stencil is exact on quadratics", "[reconstruct]") {
    // Synthetic profile on an uneven grid with polynomial data; the residual
    // then reduces to algebra the stencil must reproduce exactly.
    MetricProfile<> prof;
    prof.r = {0.0, 0.1, 0.25, 0.45, 0.7, 1.0};
    auto wexact = [](double r) { return 2.0 + 0.5 * r - 0.25 * r * r; };
    auto wp = [](double r) { return 0.5 - 0.5 * r; };
    auto fp = [](double r) { return 1.0 + 2.0 * r + 1.5 * r * r; };
    for (double r : prof.r) {
        prof.omega.push_back(wexact(r));
        prof.x.push_back(wp(r));
        prof.fprime.push_back(fp(r));
        prof.f.push_back(0.0);
        prof.nu1.push_back(0.0);
        prof.nu2.push_back(0.0);
        prof.R.push_back(0.0);
    }
    auto res = soliton_residual(n2, prof);
    for (std::size_t i = 0; i < res.r.size(); ++i) {
        const double r = res.r[i], w = wexact(r);
        const double expect1 = (2.0 + 3.0 * r) - 1.0 - 2.0 * (-0.5) / w;
        const double expect2 = w * wp(r) * fp(r) - w * w - w * (-0.5) - (wp(r) * wp(r) - 1.0);
        REQUIRE(std::abs(res.res1[i] - expect1) < 1e-12);
        REQUIRE(std::abs(res.res2[i] - expect2) < 1e-12);
    }
}

TEST_CASE("soliton residuals vanish on reconstructed solutions", "[reconstruct]") {
    auto sphere = reconstruct_profile(n2, integrate(n2, start(std::sqrt(2.0), 0, 0), 0.0, 5.0), 0.0, 1e-3);
    auto res_s = soliton_residual(n2, sphere);
    REQUIRE(max_abs(res_s.res1) < 1e-6);
    REQUIRE(max_abs(res_s.res2) < 1e-6);

    const SolitonParams<> n3{3, 1.0};
    auto cyl = reconstruct_profile(n3, integrate(n3, start(std::sqrt(2.0), 0, 0.3), 0.0, 5.0));
    auto res_c = soliton_residual(n3, cyl);
    REQUIRE(max_abs(res_c.res1) < 1e-8);
    REQUIRE(max_abs(res_c.res2) < 1e-8);

    // The residual is a genuine detector: a uniform bump in omega breaks it.
    auto bumped = sphere;
    for (auto& w : bumped.omega) w += 0.01;
    auto res_b = soliton_residual(n2, bumped);
    REQUIRE(std::max(max_abs(res_b.res1), max_abs(res_b.res2)) > 1e-3);

    MetricProfile<> coarse;
    coarse.r = {0, 1, 2, 3};
    coarse.omega = coarse.x = coarse.fprime = coarse.f = {1, 1, 1, 1};
    coarse.nu1 = coarse.nu2 = coarse.R = {0, 0, 0, 0};
    REQUIRE_THROWS_AS(soliton_residual(n2, coarse), std::invalid_argument);
}

TEST_CASE("conserved scalar field is constant along solutions", "[reconstruct]") {
    // Cylinder with y0 = 0.7: f' = lambda r - y0/omega0, so the field value is
    // n*lambda + (y0/omega0)^2 = 2.49.
    auto cyl = reconstruct_profile(n2, integrate(n2, start(1, 0, 0.7), 0.0, 8.0));
    auto field_c = hamilton_identity(n2, cyl);
    for (double v : field_c) REQUIRE(std::abs(v - 2.49) < 1e-8);

    // Sphere: f' = 0 and f anchored to 0, so the field is R = (n+1)*lambda.
    auto sph = reconstruct_profile(n2, integrate(n2, start(std::sqrt(2.0), 0, 0), 0.0, 5.0));
    auto field_s = hamilton_identity(n2, sph);
    for (double v : field_s) REQUIRE(std::abs(v - 3.0) < 1e-5);

    // Expanding plane in the f(0)=0, f'(0)=1 gauge: (1+r)^2 - 2(r^2/2+r) = 1.
    auto fl = reconstruct_profile(n2, integrate(n2, start(1, 1, 1), 0.0, 1.6));
    auto field_f = hamilton_identity(n2, fl);
    double lo = field_f[0], hi = field_f[0];
    for (double v : field_f) { lo = std::min(lo, v); hi = std::max(hi, v); }
    REQUIRE(hi - lo < 1e-5);
    REQUIRE(std::abs(field_f.front() - 1.0) < 1e-6);
}

TEST_CASE("curvature combination reproduces the stored scalar curvature", "[reconstruct]") {
    auto prof = reconstruct_profile(n2, integrate(n2, start(1.1, 0.2, -0.4), 0.0, 1.0));
    for (std::size_t i = 0; i < prof.size(); ++i)
        REQUIRE(prof.R[i] == 4 * prof.nu1[i] + 2 * prof.nu2[i]);
}

TEST_CASE("pole smoothness verdicts", "[reconstruct]") {
    // Sphere solution: omega = sqrt(2) sech(t), x = -tanh(t). Forward end is a
    // far-type pole (x -> -1), backward end an origin-type pole (x -> +1).
    auto fwd = integrate(n2, start(std::sqrt(2.0), 0, 0), 0.0, 12.0);
    auto rf = smoothness_check(fwd, TrajEnd::Forward);
    REQUIRE(rf.verdict == PoleVerdict::SmoothPole);
    REQUIRE(rf.sign == -1);
    REQUIRE(std::abs(rf.omega_limit) < 1e-4);
    REQUIRE(std::abs(rf.x_limit + 1.0) < 1e-3);

    auto bwd = integrate(n2, start(std::sqrt(2.0), 0, 0), 0.0, -12.0);
    auto rb = smoothness_check(bwd, TrajEnd::Backward);
    REQUIRE(rb.verdict == PoleVerdict::SmoothPole);
    REQUIRE(rb.sign == +1);

    // The waist end of either run is not a pole, and neither end of a cylinder is.
    REQUIRE(smoothness_check(fwd, TrajEnd::Backward).verdict == PoleVerdict::NotAPole);
    auto cyl = integrate(n2, start(1, 0, 0), 0.0, 10.0);
    REQUIRE(smoothness_check(cyl, TrajEnd::Forward).verdict == PoleVerdict::NotAPole);
    REQUIRE(smoothness_check(cyl, TrajEnd::Backward).verdict == PoleVerdict::NotAPole);

    // Expanding plane run backward decays to the origin-type pole.
    auto fb = integrate(n2, start(1, 1, 1), 0.0, -12.0);
    auto rfb = smoothness_check(fb, TrajEnd::Backward);
    REQUIRE(rfb.verdict == PoleVerdict::SmoothPole);
    REQUIRE(rfb.sign == +1);
}
