#include <doctest.h>

#include <cmath>

#include "hyperlap/errors.hpp"
#include "hyperlap/group_core.hpp"

using namespace hyperlap;

namespace {

// Generic scaled-and-squared Taylor exponential, independent of the closed forms.
GroupElement expm_taylor(const GroupElement& z) {
    int squarings = 0;
    double nrm = std::max({std::abs(z.a), std::abs(z.b), std::abs(z.c), std::abs(z.d)});
    while (nrm > 0.25) {
        nrm *= 0.5;
        ++squarings;
    }
    const double scale = std::ldexp(1.0, -squarings);
    GroupElement zs{z.a * scale, z.b * scale, z.c * scale, z.d * scale};
    GroupElement sum = GroupElement::identity();
    GroupElement term = GroupElement::identity();
    for (int k = 1; k <= 12; ++k) {
        GroupElement t{term.a * zs.a + term.b * zs.c, term.a * zs.b + term.b * zs.d,
                       term.c * zs.a + term.d * zs.c, term.c * zs.b + term.d * zs.d};
        term = {t.a / double(k), t.b / double(k), t.c / double(k), t.d / double(k)};
        sum = {sum.a + term.a, sum.b + term.b, sum.c + term.c, sum.d + term.d};
    }
    for (int i = 0; i < squarings; ++i) {
        GroupElement s = sum;
        sum = {s.a * s.a + s.b * s.c, s.a * s.b + s.b * s.d, s.c * s.a + s.d * s.c, s.c * s.b + s.d * s.d};
    }
    return sum;
}

GroupElement reassemble(const IwasawaCoords& iw) { return n_elem(iw.z) * a_elem(iw.t) * iw.k; }

double closed_form_bna(double theta, double x, double t) {
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    return t - std::log(c * c + (x * x + std::exp(2.0 * t)) * s * s - 2.0 * x * s * c);
}

}  // namespace

TEST_CASE("iwasawa decomposition of simple elements") {
    IwasawaCoords id = iwasawa_decompose(GroupElement::identity());
    CHECK(std::abs(id.z) < 1e-15);
    CHECK(std::abs(id.t) < 1e-15);
    CHECK(id.k.max_diff(GroupElement::identity()) < 1e-15);

    IwasawaCoords na = iwasawa_decompose(n_elem({1.0, 1.0}) * a_elem(0.5));
    CHECK(std::abs(na.z - cplx(1.0, 1.0)) < 1e-14);
    CHECK(std::abs(na.t - 0.5) < 1e-14);
    CHECK(na.k.max_diff(GroupElement::identity()) < 1e-14);
}

TEST_CASE("iwasawa reassembly on random elements") {
    auto rng = sample_rng(11, 0);
    double worst = 0.0, worst_unit = 0.0, worst_det = 0.0;
    for (int i = 0; i < 1000; ++i) {
        GroupElement g = random_element(rng, 0.8);
        IwasawaCoords iw = iwasawa_decompose(g);
        worst = std::max(worst, reassemble(iw).max_diff(g));
        worst_unit = std::max(worst_unit, iw.k.unitarity_defect());
        worst_det = std::max(worst_det, std::abs(reassemble(iw).det() - 1.0));
    }
    CHECK(worst <= 1e-10);
    CHECK(worst_unit <= 1e-10);
    CHECK(worst_det <= 1e-10);
}

TEST_CASE("iwasawa rejects non-finite input") {
    GroupElement bad{NAN, 0.0, 0.0, 1.0};
    CHECK_THROWS_AS(iwasawa_decompose(bad), DomainError);
}

TEST_CASE("iwasawa height") {
    for (double t : {-1.0, 0.0, 2.0}) CHECK(std::abs(iwasawa_A(a_elem(t)) - t) < 1e-14);

    double worst = 0.0;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            for (int k = 0; k < 10; ++k) {
                const double th = 2.0 * kPi * i / 10.0 + 0.1;
                const double x = -2.0 + 0.4 * j;
                const double t = -1.5 + 0.3 * k;
                const double a = iwasawa_A(b_elem(th) * n_elem(x) * a_elem(t));
                worst = std::max(worst, std::abs(a - closed_form_bna(th, x, t)));
            }
    CHECK(worst < 1e-12);

    auto rng = sample_rng(12, 0);
    for (int i = 0; i < 200; ++i) {
        GroupElement g = random_element(rng, 1.0);
        CHECK(std::abs(iwasawa_A(g) - iwasawa_decompose(g).t) <= 1e-10);
    }
}

TEST_CASE("iwasawa height of g n(z) a(t) follows the alpha-beta formula") {
    auto rng = sample_rng(13, 0);
    for (int i = 0; i < 100; ++i) {
        GroupElement g0 = random_element(rng, 0.7);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        const cplx z(u(rng), u(rng));
        const double t = u(rng);
        IwasawaCoords iw = iwasawa_decompose(g0);
        const cplx al = iw.k.a, be = iw.k.b;
        const double expected = iw.t + t -
                                std::log(std::norm(al) + std::norm(be) * (std::norm(z) + std::exp(2.0 * t)) -
                                         2.0 * (al * std::conj(be) * z).real());
        CHECK(std::abs(iwasawa_A(g0 * n_elem(z) * a_elem(t)) - expected) < 1e-10);
    }
}

TEST_CASE("kappa") {
    CHECK(kappa(GroupElement::identity()).max_diff(GroupElement::identity()) < 1e-15);
    auto rng = sample_rng(14, 0);
    for (int i = 0; i < 100; ++i) {
        GroupElement g = random_element(rng, 1.0);
        GroupElement k = kappa(g);
        // bottom row of kappa(g) is a positive multiple of (c, d)
        const cplx ratio = k.c / g.c;
        CHECK(std::abs(ratio.imag()) < 1e-12 * std::abs(ratio));
        CHECK(ratio.real() > 0.0);
        CHECK(std::abs(k.d / g.d - ratio) < 1e-10 * std::abs(ratio));
        CHECK(k.max_diff(iwasawa_decompose(g).k) <= 1e-10);
    }
}

TEST_CASE("upper half-space action") {
    auto rng = sample_rng(15, 0);
    H3Point p{cplx(0.3, -0.2), 0.7};
    H3Point q = act_h3(GroupElement::identity(), p);
    CHECK(std::abs(q.z - p.z) < 1e-15);
    CHECK(std::abs(q.height - p.height) < 1e-15);

    H3Point r = act_h3(a_elem(0.8), H3Point{});
    CHECK(std::abs(r.z) < 1e-15);
    CHECK(std::abs(r.height - std::exp(0.8)) < 1e-14);

    for (int i = 0; i < 50; ++i) {
        H3Point o = act_h3(random_unitary(rng), H3Point{});
        CHECK(std::abs(o.z) < 1e-10);
        CHECK(std::abs(o.height - 1.0) < 1e-10);
    }
    for (int i = 0; i < 100; ++i) {
        GroupElement g = random_element(rng, 0.6), h = random_element(rng, 0.6);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        H3Point x{cplx(u(rng), u(rng)), std::exp(u(rng))};
        H3Point lhs = act_h3(g, act_h3(h, x));
        H3Point rhs = act_h3(g * h, x);
        CHECK(std::abs(lhs.z - rhs.z) < 1e-9);
        CHECK(std::abs(lhs.height - rhs.height) < 1e-9);
        // isometry
        H3Point y{cplx(u(rng), u(rng)), std::exp(u(rng))};
        CHECK(std::abs(h3_distance(act_h3(g, x), act_h3(g, y)) - h3_distance(x, y)) < 1e-9);
    }
    CHECK_THROWS_AS(act_h3(GroupElement::identity(), H3Point{0.0, 0.0}), DomainError);
}

TEST_CASE("boundary action phi") {
    auto rng = sample_rng(16, 0);
    for (int i = 0; i < 100; ++i) {
        GroupElement k = random_unitary(rng);
        GroupElement u = random_unitary(rng);
        CHECK(phi_action(u, k).max_diff(k * u) < 1e-12);

        std::uniform_real_distribution<double> un(-1.0, 1.0);
        GroupElement na = n_elem({un(rng), un(rng)}) * a_elem(un(rng));
        GroupElement m = m_elem(3.0 * un(rng));
        CHECK(phi_action(na, m).max_diff(m) < 1e-12);

        GroupElement g = random_element(rng, 0.7), h = random_element(rng, 0.7);
        CHECK(phi_action(g * h, k).max_diff(phi_action(h, phi_action(g, k))) <= 1e-9);
    }
}

TEST_CASE("psi and theta") {
    PsiTheta e = psi_theta(GroupElement::identity());
    CHECK(e.psi == doctest::Approx(0.0));
    CHECK(e.theta == doctest::Approx(1.0));
    for (double rho : {0.0, 0.3, 0.6}) {
        PsiTheta pt = psi_theta(k_rho_elem(rho));
        CHECK(std::abs(pt.psi) < 1e-14);
        CHECK(std::abs(pt.theta - rho) < 1e-14);
    }
    auto rng = sample_rng(17, 0);
    const double h = 1e-5;
    for (int i = 0; i < 100; ++i) {
        GroupElement k = random_unitary(rng);
        PsiTheta pt = psi_theta(k);
        const double dx = (iwasawa_A(k * n_elem(h)) - iwasawa_A(k * n_elem(-h))) / (2.0 * h);
        const double dt = (iwasawa_A(k * a_elem(h)) - iwasawa_A(k * a_elem(-h))) / (2.0 * h);
        CHECK(std::abs(dx - pt.psi) <= 1e-6);
        CHECK(std::abs(dt - pt.theta) <= 1e-6);
        // imaginary direction of N gives i(alpha conj(beta) - conj(alpha) beta)
        const double dy = (iwasawa_A(k * n_elem({0.0, h})) - iwasawa_A(k * n_elem({0.0, -h}))) / (2.0 * h);
        const cplx expected = cplx(0.0, 1.0) * (k.a * std::conj(k.b) - std::conj(k.a) * k.b);
        CHECK(std::abs(dy - expected.real()) <= 1e-6);
    }
    CHECK_THROWS_AS(psi_theta(a_elem(1.0)), DomainError);
}

TEST_CASE("closed-form exponential on the compact part") {
    CHECK(exp_k(0.0, 0.0).max_diff(GroupElement::identity()) < 1e-15);
    auto rng = sample_rng(18, 0);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double r1 = u(rng), r2 = u(rng);
        GroupElement e = exp_k(r1, r2);
        LieVector v;
        v.x1 = r1;
        v.x2 = r2;
        CHECK(e.max_diff(expm_taylor(v.matrix())) <= 1e-10);
        CHECK(std::abs((e.a + e.d) - 2.0 * std::cos(std::hypot(r1, r2))) < 1e-13);
        CHECK(e.unitarity_defect() < 1e-13);
        CHECK(std::abs(e.det() - 1.0) < 1e-13);
    }
}

TEST_CASE("exp_sl2 and log_sl2 agree with the Taylor exponential") {
    auto rng = sample_rng(19, 0);
    std::normal_distribution<double> n01(0.0, 0.7);
    for (int i = 0; i < 200; ++i) {
        GroupElement z;
        z.a = cplx(n01(rng), n01(rng));
        z.d = -z.a;
        z.b = cplx(n01(rng), n01(rng));
        z.c = cplx(n01(rng), n01(rng));
        GroupElement g = exp_sl2(z);
        CHECK(g.max_diff(expm_taylor(z)) < 1e-10);
        // the logarithm is taken on PSL(2,C), so the roundtrip holds up to sign
        const GroupElement back = exp_sl2(log_sl2(g));
        CHECK(std::min(back.max_diff(g), back.max_diff(-g)) < 1e-9);
    }
}

TEST_CASE("left-invariant distance") {
    // geodesic-length oracle: integrate the speed of s -> a(s) with the declared norm
    const int steps = 2000;
    double length = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double s0 = double(i) / steps, s1 = double(i + 1) / steps;
        GroupElement v = a_elem(s0).inverse() * a_elem(s1);
        GroupElement tangent{v.a - 1.0, v.b, v.c, v.d - 1.0};
        length += sl2_norm(tangent);
    }
    // frozen regression constant from the oracle above
    const double dist_e_a1 = 0.5;
    CHECK(std::abs(length - dist_e_a1) < 1e-3);
    CHECK(std::abs(dist(GroupElement::identity(), a_elem(1.0)) - dist_e_a1) < 1e-12);

    auto rng = sample_rng(20, 0);
    for (int i = 0; i < 100; ++i) {
        GroupElement x = random_element(rng, 0.8), g = random_element(rng, 0.8), h = random_element(rng, 0.8);
        CHECK(dist(g, g) == doctest::Approx(0.0));
        CHECK(std::abs(dist(x * g, x * h) - dist(g, h)) <= 1e-8);
        CHECK(std::abs(dist(g, h) - dist(h, g)) <= 1e-9);
    }
}

TEST_CASE("distance to subgroups") {
    auto rng = sample_rng(21, 0);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        GroupElement g = m_elem(u(rng)) * a_elem(u(rng));
        CHECK(dist_to_subgroup(g, Subgroup::MA) <= 1e-6);
        CHECK(dist_to_subgroup(w0_elem() * g, Subgroup::MprimeA) <= 1e-6);
        CHECK(dist_to_subgroup(random_unitary(rng), Subgroup::K0) <= 1e-6);
        GroupElement real = n_elem(u(rng)) * a_elem(u(rng)) * so2_elem(u(rng));
        CHECK(dist_to_subgroup(real, Subgroup::Hprime) <= 1e-6);
        CHECK(dist_to_subgroup(w0_elem() * real, Subgroup::Hprime) <= 1e-6);
    }

    // frozen slope of d(n(iy), H') for small y; oracle is the dense parameter scan below
    const double slope_hprime = 1.0;
    for (double y : {1e-3, 3e-3, 1e-2}) {
        const double d = dist_to_subgroup(n_elem({0.0, y}), Subgroup::Hprime);
        CHECK(std::abs(d - slope_hprime * y) <= 2.0 * y * y + 1e-7);
    }
    {
        const double y = 1e-2;
        double best = 1e9;
        for (int i = -40; i <= 40; ++i)
            for (int j = -40; j <= 40; ++j)
                for (int k = -40; k <= 40; ++k) {
                    GroupElement h = n_elem(2.5e-4 * i) * a_elem(2.5e-4 * j) * so2_elem(2.5e-4 * k);
                    best = std::min(best, dist(n_elem({0.0, y}), h));
                }
        CHECK(std::abs(best - slope_hprime * y) < 2e-4);
    }

    // monotone along a normal perturbation family off MA
    double prev = -1.0;
    for (int i = 0; i <= 10; ++i) {
        const double eps = 0.02 * i;
        const double d = dist_to_subgroup(a_elem(0.3) * n_elem({eps, 0.5 * eps}), Subgroup::MA);
        CHECK(d >= prev - 1e-9);
        prev = d;
    }
    CHECK_THROWS_AS(dist_to_subgroup(a_elem(30.0), Subgroup::MA), DomainError);
}

TEST_CASE("the identity coset is critical for the height along the compact directions") {
    const double h = 1e-5;
    auto directional = [&](const GroupElement& g, int i) {
        LieVector v;
        if (i == 0) v.x1 = h;
        if (i == 1) v.x2 = h;
        if (i == 2) v.x3 = h;
        LieVector w = v;
        w.x1 = -w.x1;
        w.x2 = -w.x2;
        w.x3 = -w.x3;
        return (iwasawa_A(exp_sl2(v.matrix()) * g) - iwasawa_A(exp_sl2(w.matrix()) * g)) / (2.0 * h);
    };
    for (double t0 : {-0.7, 0.0, 1.3})
        for (int i = 0; i < 3; ++i) CHECK(std::abs(directional(a_elem(t0), i)) <= 1e-6);
    for (double y0 : {0.4, -0.9}) {
        double largest = 0.0;
        for (int i = 0; i < 3; ++i) largest = std::max(largest, std::abs(directional(n_elem({0.0, y0}) * a_elem(0.5), i)));
        CHECK(largest > 1e-3);
    }
}
