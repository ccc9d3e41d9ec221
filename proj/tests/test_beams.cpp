#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <random>

#include "hyperlap/beams.hpp"
#include "hyperlap/errors.hpp"
#include "hyperlap/numerics.hpp"

using namespace hyperlap;

namespace {

constexpr double kLambda = 60.0, kBeta = 2.0, kEps1 = 0.05;
constexpr std::size_t kNb = 128;

const BeamFamily& small_family() {
    static const BeamFamily fam =
        beam_decompose(random_band_limited(5, kLambda, kBeta, kNb), BeamCutoff{}, kLambda, kBeta, kEps1);
    return fam;
}

// chi * phi by direct synthesis at every grid point.
std::vector<cplx> direct_target(const SpectralFunction& phi, const BeamFamily& fam) {
    std::vector<H2Point> pts(fam.samples.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = fam.samples.point(i);
    auto vals = helgason_inverse_h2(phi, pts, plancherel(Space::H2));
    for (std::size_t i = 0; i < pts.size(); ++i) vals[i] *= fam.chi(pts[i]);
    return vals;
}

double rel_residual(const BeamFamily& fam, const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return std::sqrt(fam.dense_norm2(d) / fam.dense_norm2(b));
}

}  // namespace

TEST_CASE("bump_eta shape and partition of unity") {
    CHECK(bump_eta(0.0) == 1.0);
    CHECK(bump_eta(1.0 / 3.0) == 1.0);
    CHECK(bump_eta(0.7) == 0.0);
    CHECK(bump_eta(2.0 / 3.0) == 0.0);
    for (double x = 0.36; x < 0.645; x += 0.01) {
        CHECK(bump_eta(x) > 0.0);
        CHECK(bump_eta(x) < 1.0);
        CHECK(bump_eta(-x) == bump_eta(x));
        CHECK(bump_eta(x + 0.005) <= bump_eta(x));
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        double s = 0.0;
        for (int n = -60; n <= 60; ++n) s += bump_eta(x + n);
        worst = std::max(worst, std::abs(s - 1.0));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("direction tapers and offset bumps partition the circle and [-2, 2]") {
    const BeamGrid g = build_beam_grid(400.0, 2.0, 0.05);
    REQUIRE(g.N1 == 10);
    REQUIRE(g.N2 == 14);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> th(-10.0, 10.0), xs(-2.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const double theta = th(rng), x = xs(rng);
        double st = 0.0, sx = 0.0;
        int live = 0;
        for (int m = 0; m < g.N1; ++m) {
            const double t = direction_taper(g, m, theta);
            st += t;
            if (t != 0.0) {
                ++live;
                const double gap = std::abs(std::remainder(theta - g.directions[std::size_t(m)].center, 2 * kPi));
                CHECK(gap < 2.0 / 3.0 * 2 * kPi / g.N1);
            }
        }
        for (int n = 0; n <= g.N2; ++n) {
            const double e = offset_bump(g, n, x);
            sx += e;
            if (e != 0.0) {
                CHECK(x > g.offsets[std::size_t(n)].lo);
                CHECK(x < g.offsets[std::size_t(n)].hi);
            }
        }
        CHECK(live <= 2);
        CHECK(std::abs(st - 1.0) <= 1e-12);
        CHECK(std::abs(sx - 1.0) <= 1e-12);
    }
    CHECK(direction_taper(g, 0, 0.0) == 1.0);
    CHECK(direction_taper(g, 3, g.directions[3].center) == 1.0);
}

TEST_CASE("offset coordinate agrees with the group action") {
    const BeamGrid g = build_beam_grid(100.0, 2.0, 0.05);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const cplx z(u(rng), std::exp(u(rng)));
        const int m = int(rng() % std::uint64_t(g.N1));
        const double phi = 0.5 * g.directions[std::size_t(m)].center;
        // so2(-phi) = [[c, -s], [s, c]] as a Mobius map.
        const cplx w = (std::cos(phi) * z - std::sin(phi)) / (std::sin(phi) * z + std::cos(phi));
        CHECK(beam_offset_coordinate(g, m, H2Point{z.real(), z.imag()}) == doctest::Approx(w.real()).epsilon(1e-12));
    }
}

TEST_CASE("sample grid resolves the oscillation scale") {
    const H2Grid g = beam_sample_grid(400.0, BeamCutoff{});
    CHECK(g.dt <= 2 * kPi / (1.5 * 800.0) + 1e-15);
    CHECK(g.dx <= 2 * kPi / (1.5 * 800.0) * std::exp(-0.75) + 1e-15);
    CHECK(g.x0 == doctest::Approx(-0.75));
    CHECK(g.x0 + g.dx * double(g.nx - 1) == doctest::Approx(0.75));
    CHECK_THROWS_AS(beam_sample_grid(400.0, BeamCutoff{0.5, 1.2}), DomainError);
}

TEST_CASE("beams reconstruct chi phi and respect their supports") {
    const BeamFamily& fam = small_family();
    const auto phi = random_band_limited(5, kLambda, kBeta, kNb);
    const auto oracle = direct_target(phi, fam);
    const double res_sum = rel_residual(fam, fam.sum_all(), oracle);
    const double res_tab = rel_residual(fam, fam.target, oracle);
    std::printf("beams lambda=60: %zu beams, reconstruction %.2e, table synthesis %.2e\n", fam.beams.size(),
                res_sum, res_tab);
    CHECK(res_sum <= 1e-6);
    CHECK(res_tab <= 1e-6);
    for (const SparseBeam& b : fam.beams) {
        const GridInterval& J = fam.grid.offsets[std::size_t(b.n)];
        for (std::size_t i = 0; i < b.index.size(); ++i) {
            const H2Point z = fam.samples.point(b.index[i]);
            const double x = beam_offset_coordinate(fam.grid, b.m, z);
            if (!(fam.chi(z) > 0.0 && x > J.lo && x < J.hi)) {
                FAIL("beam sample outside its strip");
                break;
            }
        }
    }
}

TEST_CASE("spectrum concentrated in one direction gives beams of that direction only") {
    const BeamGrid g = build_beam_grid(kLambda, kBeta, kEps1);
    const int mt = 2;
    auto phi = random_band_limited(9, kLambda, kBeta, kNb);
    for (std::size_t k = 0; k < phi.nb; ++k)
        if (direction_taper(g, mt, phi.theta(k)) != 1.0)
            for (std::size_t j = 0; j < phi.ns; ++j) phi.at(j, k) = 0.0;
    const BeamFamily fam = beam_decompose(phi, BeamCutoff{}, kLambda, kBeta, kEps1);
    double own = 0.0, other = 0.0;
    for (const SparseBeam& b : fam.beams) (b.m == mt ? own : other) += fam.norm2(b);
    CHECK(own > 0.0);
    CHECK(std::sqrt(other / own) <= 1e-6);
}

TEST_CASE("classification thresholds and the 1/delta bound") {
    const BeamFamily& fam = small_family();
    const double C = fam.square_sum_constant();
    std::printf("beams lambda=60: square-sum constant %.4f, spectral ratio %.4f\n", C,
                fam.target_norm2 / fam.spectral_norm2);
    CHECK(C > 0.3);
    CHECK(C < 3.0);
    CHECK(classify_beams(fam, 1.0, C).large.size() <= 1);
    for (double delta : {0.2, 0.05}) {
        const auto cls = classify_beams(fam, delta, C);
        CHECK(double(cls.large.size()) <= 1.0 / delta);
        CHECK(cls.large.size() + cls.small.size() == fam.beams.size());
    }
    std::size_t nonzero = 0;
    for (const SparseBeam& b : fam.beams) nonzero += fam.norm2(b) > 0.0;
    CHECK(classify_beams(fam, 1e-300, C).large.size() == nonzero);
    CHECK_THROWS_AS(classify_beams(fam, 0.1, 0.5 * C), DomainError);
    CHECK_THROWS_AS(classify_beams(fam, 0.0, C), DomainError);
}

TEST_CASE("cross terms on the full set and a random subset") {
    const BeamFamily& fam = small_family();
    std::vector<std::size_t> all(fam.beams.size()), sub;
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::mt19937_64 rng(21);
    for (std::size_t i : all)
        if (rng() % 3 == 0) sub.push_back(i);
    const double full = cross_term_constant(fam, all), part = cross_term_constant(fam, sub);
    std::printf("beams lambda=60: cross-term constant full %.4f subset %.4f\n", full, part);
    CHECK(std::isfinite(full));
    CHECK(std::isfinite(part));
    // On the full set the cross term is |1 - C| by definition.
    CHECK(full == doctest::Approx(std::abs(1.0 - fam.square_sum_constant())).epsilon(1e-9));
    CHECK(part < 2.0);
}

TEST_CASE("L1/L2 ratios: zero beams and scaling") {
    const BeamFamily& fam = small_family();
    const BeamRatioReport r = beam_l1_l2(fam);
    REQUIRE(r.ratios.size() == fam.beams.size());
    for (std::size_t i = 0; i < fam.beams.size(); ++i)
        if (fam.beams[i].index.empty()) CHECK(r.ratios[i] == 0.0);
    BeamFamily twice = fam;
    for (SparseBeam& b : twice.beams)
        for (cplx& v : b.values) v *= 2.0;
    const BeamRatioReport r2 = beam_l1_l2(twice);
    for (std::size_t i = 0; i < r.ratios.size(); ++i) CHECK(r2.ratios[i] == doctest::Approx(r.ratios[i]).epsilon(1e-12));
    std::printf("beams lambda=60: max L1/L2 %.4f, constant %.3f\n", r.max_ratio, r.constant);
    CHECK(r.constant > 0.0);
    CHECK(r.max_ratio < std::sqrt(1.5 * 1.5 * std::exp(0.75) * 2.0));
}

TEST_CASE("spectral leakage of one beam away from its direction window") {
    const BeamFamily& fam = small_family();
    const auto r = beam_leakage(fam, 1, fam.grid.N2 / 2, 256, 0.5);
    std::printf("beams lambda=60: beam spectral %.4e spatial %.4e leakage fraction %.3e\n", r.total, r.spatial,
                r.fraction());
    CHECK(r.total == doctest::Approx(r.spatial).epsilon(0.05));
    CHECK(r.fraction() < 1e-2);
}

TEST_CASE("family directory round trip") {
    const BeamFamily& fam = small_family();
    const auto dir = (std::filesystem::temp_directory_path() / "hyperlap_beams_rt").string();
    std::filesystem::remove_all(dir);
    save_beam_family(fam, dir);
    CHECK(std::filesystem::exists(dir + "/grid.json"));
    const BeamFamily back = load_beam_family(dir);
    REQUIRE(back.beams.size() == fam.beams.size());
    for (std::size_t i = 0; i < fam.beams.size(); ++i) {
        CHECK(back.beams[i].index == fam.beams[i].index);
        CHECK(back.beams[i].values == fam.beams[i].values);
    }
    CHECK(back.square_sum_constant() == doctest::Approx(fam.square_sum_constant()).epsilon(1e-12));
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_beam_family(dir), ResourceError);
}

TEST_CASE("domain errors") {
    auto phi = random_band_limited(1, kLambda, kBeta, 16);
    CHECK_THROWS_AS(beam_decompose(phi, BeamCutoff{0.5, 1.5}, kLambda, kBeta, kEps1), DomainError);
    CHECK_THROWS_AS(beam_decompose(phi, BeamCutoff{}, 1.0, 2.0, kEps1), DomainError);
    // N1 = 6 at lambda = 100: the support |x|, |t| < 1 rotated by a sixth of a turn reaches |x| = 2.63 > 2.19.
    const auto p100 = random_band_limited(1, 100.0, kBeta, 16);
    CHECK_THROWS_AS(beam_decompose(p100, BeamCutoff{0.5, 1.0}, 100.0, kBeta, kEps1), DomainError);
    auto wide = SpectralFunction::zeros(Space::H2, kLambda - 5.0, 0.5, 21, 16);
    wide.at(0, 0) = 1.0;
    CHECK_THROWS_AS(beam_decompose(wide, BeamCutoff{}, kLambda, kBeta, kEps1), DomainError);
    CHECK_THROWS_AS(random_band_limited(1, 1.0, 2.0, 16), DomainError);
}
