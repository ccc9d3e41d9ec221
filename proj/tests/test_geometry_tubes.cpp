#include <doctest.h>

#include <chrono>
#include <cmath>

#include "hyperlap/errors.hpp"
#include "hyperlap/geometry_tubes.hpp"

using namespace hyperlap;

namespace {

// Circumcenter of three points of the plane.
cplx circumcenter(cplx p, cplx q, cplx r) {
    const cplx b = q - p, c = r - p;
    const double d = 2.0 * (b.real() * c.imag() - b.imag() * c.real());
    const double bb = std::norm(b), cc = std::norm(c);
    return p + cplx((c.imag() * bb - b.imag() * cc) / d, (b.real() * cc - c.real() * bb) / d);
}

cplx mobius(const GroupElement& g, cplx x) { return (g.a * x + g.b) / (g.c * x + g.d); }

// Distance between the planes over R and over the circle g(R), when they are disjoint: cosh d = |Im c| / r.
double plane_distance_closed(const GroupElement& g) {
    const cplx p = mobius(g, 0.0), q = mobius(g, 1.0), r = g.a / g.c;
    const cplx c = circumcenter(p, q, r);
    return std::acosh(std::abs(c.imag()) / std::abs(p - c));
}

GroupElement off_diagonal(double size, double phase) {
    const cplx v = std::polar(size / std::sqrt(2.0), phase);
    return exp_sl2(GroupElement{0.0, v, v, 0.0});
}

}  // namespace

TEST_CASE("tube specification guards") {
    CHECK_NOTHROW(TubeSpec(GroupElement::identity(), 1.0, 20.0));
    CHECK_THROWS_AS(TubeSpec(GroupElement::identity(), 1.5, 2.0), DomainError);
    CHECK_THROWS_AS(TubeSpec(GroupElement::identity(), 0.0, 2.0), DomainError);
    CHECK_THROWS_AS(TubeSpec(GroupElement::identity(), 0.1, 25.0), DomainError);
}

TEST_CASE("tube membership") {
    for (double d : {1e-6, 0.3, 1.0})
        for (double T : {0.1, 5.0}) CHECK(tube_contains(TubeSpec(GroupElement::identity(), d, T), H3Point{}));
    const TubeSpec tube(GroupElement::identity(), 0.01, 2.0);
    CHECK_FALSE(tube_contains(tube, H3Point{cplx(0.0, 1.0001 * 0.01), 1.0}));
    CHECK(tube_contains(tube, H3Point{cplx(0.0, 0.9999 * 0.01), 1.0}));
    CHECK_FALSE(tube_contains(tube, H3Point{0.0, std::exp(2.01)}));

    // equivariance under left translation
    int agree = 0, inside = 0;
    for (std::uint64_t i = 0; i < 300; ++i) {
        auto rng = sample_rng(7, i);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const GroupElement g = random_element(rng, 0.7);
        const H3Point p{cplx(0.3 * u(rng), 0.3 * u(rng)), std::exp(2.5 * u(rng))};
        const bool a = tube_contains(TubeSpec(GroupElement::identity(), 0.2, 2.0), p);
        const bool b = tube_contains(TubeSpec(g, 0.2, 2.0), act_h3(g, p));
        agree += a == b;
        inside += a;
    }
    CHECK(agree == 300);
    CHECK(inside > 20);
}

TEST_CASE("segments in tubes") {
    for (double T : {1.0, 3.0})
        for (double h : {0.5, 1.0}) CHECK(segment_in_tube(GroupElement::identity(), TubeSpec({}, 1e-9, T), h));
    CHECK_FALSE(segment_in_tube(GroupElement::identity(), TubeSpec({}, 0.5, 0.5), 1.0));
    CHECK_THROWS_AS(segment_in_tube(a_elem(8.0), TubeSpec({}, 0.5, 5.0), 1.0), DomainError);

    // a perturbation normal to M'A at distance 10 delta leaves the tube of radius delta
    const double delta = 1e-3;
    for (double phase : {0.0, 0.7, 2.0}) {
        const GroupElement g = off_diagonal(10.0 * delta, phase);
        const double d = dist_to_subgroup(g, Subgroup::MprimeA);
        CHECK(std::abs(d - 10.0 * delta) < 1e-6);
        CHECK_FALSE(segment_in_tube(g, TubeSpec({}, delta, 2.0), 1.0));
        CHECK(segment_in_tube(g, TubeSpec({}, 100.0 * delta, 2.0), 1.0));
    }
}

TEST_CASE("inclusion correspondence constants") {
    for (double offset : {1e-2, 1e-3}) {
        const InclusionReport rep = inclusion_experiment(11, 500, offset);
        MESSAGE("offset " << offset << ": forward C = " << rep.forward_constant
                          << ", converse C = " << rep.converse_constant << ", max |t| = " << rep.max_height);
        CHECK(std::isfinite(rep.forward_constant));
        CHECK(std::isfinite(rep.converse_constant));
        CHECK(rep.forward_constant < 20.0);
        CHECK(rep.converse_constant < 20.0);
        CHECK(rep.max_height < 2.1);
    }
}

TEST_CASE("tube rotation and enlargement constants") {
    for (double delta : {1e-2, 1e-3}) {
        const double c_rot = tube_rotation_constant(5, 50, 1000, delta, 2.0);
        const double c_big = tube_enlargement_constant(6, 50, 1000, delta, 2.0);
        MESSAGE("delta " << delta << ": rotation C = " << c_rot << ", enlargement C = " << c_big);
        CHECK(std::isfinite(c_rot));
        CHECK(std::isfinite(c_big));
        CHECK(c_rot >= 1.0);
        CHECK(c_big >= 1.0);
    }
}

TEST_CASE("beam grid") {
    const BeamGrid g = build_beam_grid(10000.0, 1.0, 0.05);
    CHECK(g.N1 == 63);
    CHECK(g.N2 == 100);
    CHECK(g.directions.size() == 63);
    CHECK(g.offsets.size() == 101);
    for (int n = 0; n < g.N2; ++n) CHECK(std::abs(g.x(n + 1) - g.x(n) - 0.04) < 1e-14);
    CHECK(std::abs(g.x(0) + 2.0) < 1e-14);
    CHECK(std::abs(g.x(g.N2) - 2.0) < 1e-14);
    // the offset intervals cover [-2, 2] and the direction intervals cover the circle
    for (int i = 0; i <= 4000; ++i) {
        const double x = -2.0 + 1e-3 * i;
        bool hit = false;
        for (const auto& J : g.offsets) hit = hit || (J.lo <= x && x <= J.hi);
        CHECK(hit);
    }
    for (int i = 0; i < 2000; ++i) {
        const double th = 2.0 * kPi * i / 2000.0;
        bool hit = false;
        for (const auto& I : g.directions)
            for (double shift : {-2.0 * kPi, 0.0, 2.0 * kPi}) hit = hit || (I.lo <= th + shift && th + shift <= I.hi);
        CHECK(hit);
    }
    CHECK_THROWS_AS(build_beam_grid(0.5, 1.0, 0.05), DomainError);
}

TEST_CASE("tube beam counts") {
    const BeamGrid grid = build_beam_grid(400.0, 1.0, 0.05);
    for (int m : {0, 4, 11})
        for (int n : {0, 7, 20}) {
            CHECK(count_tube_beams(TubeSpec(grid.element(m, n), 0.01, 2.0), grid) >= 1);
            const int c = count_tube_beams(TubeSpec(grid.element(m, n) * a_elem(0.3), 1e-9, 2.0), grid);
            CHECK((c == 0 || c == 1));
        }
    const auto rows = tube_count_experiment(21, 200, 0.05, 2.0, grid);
    double worst = 0.0;
    long total = 0;
    for (const auto& r : rows) {
        worst = std::max(worst, r.ratio);
        total += r.count;
    }
    MESSAGE("max count / bound over 200 tubes: " << worst << " (total count " << total << ")");
    CHECK(total > 0);
    CHECK(worst < 10.0);
    CHECK(CountRow::csv_header() == "seed,lambda,beta,eps1,delta,omega,count,bound,ratio");
    CHECK(rows.front().csv().rfind("21,400,1,0.05,0.05,0,", 0) == 0);
}

TEST_CASE("quadruple counts") {
    const BeamGrid grid = build_beam_grid(400.0, 1.0, 0.05);
    // identity: only the diagonal pairs are close to MA
    const double spacing = 4.0 / grid.N2;
    CHECK(count_quadruples(GroupElement::identity(), 0.1 * spacing, grid) == long(grid.size()));

    auto rng = sample_rng(3, 0);
    const GroupElement generic = random_element(rng, 0.8);
    CHECK(count_quadruples(generic, 0.0, grid) == 0);
    CHECK_THROWS_AS(count_quadruples(GroupElement::identity(), 0.01, build_beam_grid(1e6, 1.0, 0.05)), ResourceError);
    CHECK_THROWS_AS(count_quadruples(a_elem(9.0), 0.01, grid), DomainError);

    const double omega = 0.25, delta = 0.05;
    double worst = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto r = sample_rng(17, i);
        const GroupElement g = random_off_hprime(r, omega);
        const long c = count_quadruples(g, delta, grid);
        const double bound = (1.0 + delta * grid.N1) * (1.0 + delta * grid.N2) * (1.0 + delta * grid.N1 / omega) *
                             (1.0 + delta * grid.N2 / omega);
        worst = std::max(worst, double(c) / bound);
    }
    MESSAGE("max quadruple count / bound over 50 g: " << worst << " ("
            << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s)");
    CHECK(std::isfinite(worst));
    CHECK(worst < 10.0);
}

TEST_CASE("close pair classification") {
    const BoundaryPoint b{0.9};
    CHECK(close_pair_classify(b, 0.4, b, 0.4, 1e-9).kind == PairKind::OrientationPreserving);

    // x1 = 0: b1^{-1} b2 = so2(pi/2) and x2 = 0 give a reversed copy of the same geodesic
    {
        const PairClassification pc =
            close_pair_classify(BoundaryPoint::canonical(0.3), 0.0, BoundaryPoint::canonical(0.3 + kPi), 0.0, 1e-6);
        CHECK(pc.kind == PairKind::OrientationReversing);
        CHECK(pc.direction_gap < 1e-8);
        CHECK(pc.offset_gap < 1e-12);
    }
    for (double x1 : {-1.5, 0.4, 1.8}) {
        // b1^{-1} b2 = so2(phi) with (cos phi, sin phi) = (x2, 1) / sqrt(1 + x2^2), x2 = -x1
        const double x2 = -x1;
        const double phi = std::atan2(1.0, x2);
        const BoundaryPoint b1 = BoundaryPoint::canonical(0.3);
        const PairClassification pc = close_pair_classify(b1, x1, BoundaryPoint::canonical(0.3 + 2.0 * phi), x2, 1e-6);
        CHECK(pc.kind == PairKind::OrientationReversing);
        CHECK(pc.direction_gap < 1e-8);
        CHECK(pc.offset_gap < 1e-12);
        // the same matrix written in x1 instead of x2 is not a reversed pair
        const double wrong = std::atan2(1.0, x1);
        CHECK(close_pair_classify(b1, x1, BoundaryPoint::canonical(0.3 + 2.0 * wrong), x2, 1e-6).kind ==
              PairKind::Neither);
    }

    int neither = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto rng = sample_rng(8, i);
        std::uniform_real_distribution<double> th(0.0, 2.0 * kPi), xx(-2.0, 2.0);
        neither += close_pair_classify({th(rng)}, xx(rng), {th(rng)}, xx(rng), 1e-6).kind == PairKind::Neither;
    }
    CHECK(neither == 20);

    // near pairs: the gaps are controlled by the distance, constants reported
    double c_pres = 0.0, c_rev = 0.0;
    for (std::uint64_t i = 0; i < 40; ++i) {
        auto rng = sample_rng(9, i);
        std::uniform_real_distribution<double> th(0.0, 2.0 * kPi), xx(-2.0, 2.0), nudge(-1e-3, 1e-3);
        const double t1 = th(rng), x1 = xx(rng);
        const PairClassification p = close_pair_classify({t1}, x1, {t1 + nudge(rng)}, x1 + nudge(rng), 0.05);
        REQUIRE(p.kind == PairKind::OrientationPreserving);
        c_pres = std::max(c_pres, std::max(p.direction_gap, p.offset_gap) / p.dist_ma);
        const double phi = std::atan2(1.0, -x1);
        const PairClassification q =
            close_pair_classify({t1}, x1, {t1 + 2.0 * phi + nudge(rng)}, -x1 + nudge(rng), 0.05);
        REQUIRE(q.kind == PairKind::OrientationReversing);
        c_rev = std::max(c_rev, std::max(q.direction_gap, q.offset_gap) / q.dist_w0ma);
    }
    MESSAGE("close-pair constants: preserving " << c_pres << ", reversing " << c_rev);
    CHECK(c_pres < 50.0);
    CHECK(c_rev < 50.0);
}

TEST_CASE("decomposition near H2") {
    // SL(2,R): no twist, real translation
    const GroupElement real_g = n_elem(0.7) * a_elem(-0.4) * so2_elem(1.1);
    NearH2Decomposition d = decompose_near_h2(real_g);
    CHECK_FALSE(d.positive_distance);
    CHECK(d.theta == 0.0);
    CHECK(std::abs(d.z.imag()) < 1e-14);
    CHECK(d.reassemble().max_diff(real_g) < 1e-12);

    for (double th : {0.2, 0.9, 1.4}) {
        d = decompose_near_h2(m_elem(th));
        CHECK(d.k1.max_diff(GroupElement::identity()) < 1e-14);
        CHECK(std::abs(d.z) < 1e-14);
        CHECK(std::abs(d.theta - th) < 1e-14);
        CHECK(std::abs(d.t) < 1e-14);
        CHECK(d.k2.max_diff(GroupElement::identity()) < 1e-14);
    }

    // tangent at infinity
    d = decompose_near_h2(n_elem(cplx(0.3, 0.5)) * a_elem(0.2));
    CHECK_FALSE(d.positive_distance);
    CHECK(d.reassemble().max_diff(n_elem(cplx(0.3, 0.5)) * a_elem(0.2)) < 1e-12);

    int intersecting = 0, apart = 0;
    double worst = 0.0, worst_dist = 0.0;
    for (std::uint64_t i = 0; i < 60; ++i) {
        auto rng = sample_rng(12, i);
        const GroupElement g = random_off_hprime(rng, 0.05 + 0.01 * double(i % 10));
        const NearH2Decomposition f = decompose_near_h2(g);
        if (f.positive_distance) {
            ++apart;
            worst_dist = std::max(worst_dist, std::abs(f.plane_distance - plane_distance_closed(g)));
            continue;
        }
        ++intersecting;
        worst = std::max(worst, f.reassemble().max_diff(g));
        CHECK(f.k1.unitarity_defect() < 1e-12);
        CHECK(std::abs(f.k1.a.imag()) + std::abs(f.k1.b.imag()) < 1e-12);
        CHECK(f.theta >= 0.0);
        CHECK(f.theta < 0.5 * kPi);
    }
    MESSAGE(intersecting << " intersecting, " << apart << " disjoint; reassembly " << worst << ", distance "
                         << worst_dist);
    CHECK(intersecting > 5);
    CHECK(apart > 5);
    CHECK(worst <= 1e-8);
    CHECK(worst_dist <= 1e-8);
    CHECK_THROWS_AS(decompose_near_h2(a_elem(9.0)), DomainError);
}

TEST_CASE("plane-tube incidences off H'") {
    const BeamGrid grid = build_beam_grid(400.0, 1.0, 0.05);
    const double delta = 0.01, omega = 0.2, T = 3.0;
    double worst = 0.0;
    int hits = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto rng = sample_rng(23, i);
        const GroupElement g = random_off_hprime(rng, omega);
        const int c = count_plane_beams(g, delta, T, grid);
        hits += c;
        worst = std::max(worst, c / ((1.0 + delta * grid.N1 / omega) * (1.0 + delta * grid.N2 / omega)));
    }
    MESSAGE("max plane-beam count / bound over 20 g: " << worst << " (total " << hits << ")");
    CHECK(std::isfinite(worst));
    // a plane through a beam geodesic holds a segment of it
    const GroupElement through = grid.element(3, 5) * m_elem(0.4);
    CHECK(plane_segment_in_tube(through, TubeSpec(grid.element(3, 5), 1e-6, T)));
}
