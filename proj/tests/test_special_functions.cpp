#include <doctest.h>

#include <cmath>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_legendre.h>

#include "hyperlap/errors.hpp"
#include "hyperlap/group_core.hpp"
#include "hyperlap/special_functions.hpp"

using namespace hyperlap;

namespace {

// Direct periodic trapezoid over theta for the generalized spherical function.
cplx generalized_direct(cplx s, int n, const H2Point& x, int nodes) {
    cplx sum = 0.0;
    const cplx p = cplx(0.0, 1.0) * s + 0.5;
    for (int i = 0; i < nodes; ++i) {
        const double th = 2.0 * kPi * i / nodes;
        sum += std::exp(p * height_h2(th, x)) * std::polar(1.0, n * th);
    }
    return sum / double(nodes);
}

}  // namespace

TEST_CASE("spherical functions equal one at the origin") {
    for (double s : {0.0, 1.5, 40.0}) {
        CHECK(std::abs(spherical_h2(s, 0.0) - 1.0) < 1e-15);
        CHECK(std::abs(spherical_h3(s, 0.0) - 1.0) < 1e-15);
    }
}

TEST_CASE("Weyl symmetry of spherical functions") {
    for (cplx s : {cplx(0.7, 0.0), cplx(12.0, 0.2), cplx(150.0, -0.4), cplx(3.0, 0.5)})
        for (double t : {0.1, 1.0, 3.5}) {
            CHECK(std::abs(spherical_h2(s, t) - spherical_h2(-s, t)) <= 1e-8);
            CHECK(std::abs(spherical_h3(s, t) - spherical_h3(-s, t)) <= 1e-8);
        }
}

TEST_CASE("H3 quadrature agrees with the closed form") {
    double worst = 0.0;
    for (double s : {0.05, 0.5, 2.0, 10.0, 75.0, 300.0})
        for (double t : {0.01, 0.2, 0.9, 2.0, 4.0, 6.0})
            worst = std::max(worst, std::abs(spherical_h3(s, t) - spherical_h3_closed(s, t)));
    CHECK(worst <= 1e-7);
}

TEST_CASE("H2 quadrature agrees with the conical function oracle") {
    gsl_set_error_handler_off();
    double worst = 0.0;
    for (double s : {0.0, 0.4, 3.0, 20.0})
        for (double t : {0.05, 0.5, 1.5, 3.0}) {
            gsl_sf_result r;
            if (gsl_sf_conicalP_0_e(s, std::cosh(t), &r) != GSL_SUCCESS) continue;
            worst = std::max(worst, std::abs(spherical_h2(s, t) - r.val));
        }
    CHECK(worst <= 1e-8);
}

TEST_CASE("H2 Magnus profile agrees with quadrature") {
    std::vector<double> ts;
    for (int j = 0; j <= 3000; ++j) ts.push_back(2e-3 * j);
    double worst = 0.0;
    for (double s : {0.0, 0.3, 5.0, 50.0, 400.0, 800.0}) {
        const auto prof = spherical_h2_profile(s, ts);
        for (int j : {1, 3, 17, 120, 499, 1000, 2222, 3000}) {
            worst = std::max(worst, std::abs(prof[j] - spherical_h2(s, ts[j]).real()));
        }
    }
    CHECK(worst <= 1e-7);
}

TEST_CASE("spherical function envelopes") {
    for (double t : {0.5, 1.0, 2.0}) {
        EnvelopeReport h2 = spherical_envelope(Space::H2, t, 1.0, 500.0, 0.25);
        EnvelopeReport h3 = spherical_envelope(Space::H3, t, 1.0, 500.0, 0.05);
        MESSAGE("t=" << t << " H2 exponent " << h2.fit.exponent << " C=" << h2.constant << " | H3 exponent "
                     << h3.fit.exponent << " C=" << h3.constant);
        CHECK(std::isfinite(h2.constant));
        CHECK(std::isfinite(h3.constant));
        CHECK(h2.fit.exponent < 0.0);
        CHECK(h3.fit.exponent < h2.fit.exponent);
    }
}

TEST_CASE("gamma_n") {
    for (cplx s : {cplx(0.3, 0.0), cplx(-4.0, 0.2), cplx(17.0, -0.1)}) CHECK(gamma_n(0, s) == cplx(1.0));
    for (int n : {1, 5, 40})
        for (double s : {-30.0, -1.0, 0.0, 0.25, 7.0, 300.0}) CHECK(std::abs(std::abs(gamma_n(n, s)) - 1.0) < 1e-12);
    CHECK(std::abs(gamma_n(3, 2.0) - gamma_n(-3, 2.0)) < 1e-15);
    CHECK(std::abs(gamma_n(4, 1.3) * gamma_n(4, -1.3) - 1.0) < 1e-13);
    CHECK_THROWS_AS(gamma_n(3, cplx(0.0, 1.5)), DomainError);

    // bound for 1/Gamma_n in the horizontal strip
    double strip_c = 0.0;
    for (int n = 0; n <= 60; ++n) {
        const double width = std::min(0.25, 1.0 / (1.0 + n));
        for (int i = 0; i <= 200; ++i)
            for (double frac : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
                const cplx z(-50.0 + 0.5 * i, frac * width);
                strip_c = std::max(strip_c, std::abs(1.0 / gamma_n(n, z)));
            }
    }
    MESSAGE("strip bound constant for 1/Gamma_n: " << strip_c);
    CHECK(strip_c < 10.0);

    // derivative bound |d^m/ds^m 1/Gamma_n| <= C m! (1+|n|)^m on the real line
    double deriv_c = 0.0;
    const double h = 1e-3;
    for (int n = 0; n <= 60; n += 3) {
        for (int i = 0; i <= 100; ++i) {
            const double s = -25.0 + 0.5 * i;
            auto f = [&](double x) { return 1.0 / gamma_n(n, x); };
            const cplx d1 = (f(s + h) - f(s - h)) / (2.0 * h);
            const cplx d2 = (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
            const cplx d3 = (f(s + 2 * h) - 2.0 * f(s + h) + 2.0 * f(s - h) - f(s - 2 * h)) / (2.0 * h * h * h);
            const double base = 1.0 + n;
            deriv_c = std::max({deriv_c, std::abs(d1) / base, std::abs(d2) / (2.0 * base * base),
                                std::abs(d3) / (6.0 * base * base * base)});
        }
    }
    MESSAGE("derivative bound constant for 1/Gamma_n: " << deriv_c);
    CHECK(deriv_c < 10.0);
}

TEST_CASE("generalized spherical functions") {
    for (double s : {0.5, 4.0}) {
        CHECK(std::abs(generalized_spherical(s, 0, H2Point{0.7, 0.4}) -
                       spherical_h2(s, [] {
                           double phi, t;
                           h2_polar(H2Point{0.7, 0.4}, &phi, &t);
                           return t;
                       }())) < 1e-10);
        for (int n : {1, 2, -3}) CHECK(std::abs(generalized_spherical(s, n, H2Point{})) < 1e-12);
    }
    // polar coordinates reproduce the point
    for (H2Point x : {H2Point{0.3, 2.0}, H2Point{-1.2, 0.3}, H2Point{0.0, 0.5}}) {
        double phi, t;
        h2_polar(x, &phi, &t);
        H3Point p = act_h3(so2_elem(phi) * a_elem(t), H3Point{});
        CHECK(std::abs(p.z.real() - x.x) < 1e-12);
        CHECK(std::abs(p.height - x.y) < 1e-12);
    }
    // direct theta trapezoid oracle
    for (int n : {0, 1, -2, 5})
        for (H2Point x : {H2Point{0.2, 1.5}, H2Point{-0.6, 0.7}}) {
            const cplx s(2.3, 0.1);
            CHECK(std::abs(generalized_spherical(s, n, x) - generalized_direct(s, n, x, 4096)) < 1e-10);
        }
    // functional equation on random triples
    auto rng = sample_rng(31, 0);
    std::uniform_real_distribution<double> us(0.2, 8.0), ux(-1.5, 1.5), uy(-1.0, 1.0);
    std::uniform_int_distribution<int> un(-6, 6);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double s = us(rng);
        const int n = un(rng);
        const H2Point x{ux(rng), std::exp(uy(rng))};
        const cplx lhs = generalized_spherical(-s, n, x);
        const cplx rhs = generalized_spherical(s, n, x) * gamma_n(n, s);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    CHECK(worst <= 1e-7);
}

TEST_CASE("spherical function domain checks") {
    CHECK_THROWS_AS(spherical_h2(cplx(1.0, 0.8), 1.0), DomainError);
    CHECK_THROWS_AS(spherical_h3(cplx(1.0, -0.6), 1.0), DomainError);
}
