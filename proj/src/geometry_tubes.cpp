#include "hyperlap/geometry_tubes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "hyperlap/errors.hpp"
#include "hyperlap/numerics.hpp"

namespace hyperlap {

namespace {

constexpr int kSegmentSamples = 64;

double sample_t(int i, double halflen) { return -halflen + 2.0 * halflen * double(i) / double(kSegmentSamples - 1); }

bool inside(const H3Point& q, double delta, double T) {
    return std::abs(q.z) <= delta && std::abs(std::log(q.height)) <= T;
}

// All 64 samples of e a(t) o inside T_delta^T(l, o); e already expressed in tube coordinates.
bool segment_inside(const GroupElement& e, double delta, double T, double halflen) {
    for (int i = 0; i < kSegmentSamples; ++i)
        if (!inside(act_h3(e, H3Point{0.0, std::exp(sample_t(i, halflen))}), delta, T)) return false;
    return true;
}

double frob2(const GroupElement& g) { return std::norm(g.a) + std::norm(g.b) + std::norm(g.c) + std::norm(g.d); }

GroupElement random_traceless(std::mt19937_64& rng, double norm, bool real) {
    std::normal_distribution<double> n01(0.0, 1.0);
    GroupElement z;
    if (real) {
        z.a = n01(rng);
        z.b = n01(rng);
        z.c = n01(rng);
    } else {
        z.a = cplx(n01(rng), n01(rng));
        z.b = cplx(n01(rng), n01(rng));
        z.c = cplx(n01(rng), n01(rng));
    }
    z.d = -z.a;
    const double s = norm / sl2_norm(z);
    return {z.a * s, z.b * s, z.c * s, z.d * s};
}

// Upper half-plane point (x, y) on the hyperboloid -X0^2 + X1^2 + X2^2 = -1.
std::array<double, 3> to_hyperboloid(double x, double y) {
    const double r2 = x * x + y * y;
    return {(1.0 + r2) / (2.0 * y), x / y, (r2 - 1.0) / (2.0 * y)};
}

void from_hyperboloid(const std::array<double, 3>& X, double* x, double* y) {
    *y = 1.0 / (X[0] - X[2]);
    *x = X[1] * *y;
}

// Nearest point of the vertical plane over the real axis to (z, h).
H3Point project_to_h2(const H3Point& p) { return {p.z.real(), std::hypot(p.height, p.z.imag())}; }

}  // namespace

TubeSpec::TubeSpec(const GroupElement& b, double d, double t) : base(b), delta(d), T(t) {
    if (!(delta > 0.0) || delta > 1.0) throw DomainError("TubeSpec: radius must lie in (0, 1]");
    if (!(T > 0.0) || T > 20.0) throw DomainError("TubeSpec: half-length must lie in (0, 20]");
    if (!base.finite()) throw DomainError("TubeSpec: non-finite base");
}

GroupElement BeamGrid::element(int m, int n) const { return b(m).element() * n_elem(x(n)); }

BeamGrid build_beam_grid(double lambda, double beta, double eps1) {
    if (!(lambda >= 1.0) || !(beta > 0.0) || !(eps1 >= 0.0) || eps1 >= 0.5)
        throw DomainError("build_beam_grid: need lambda >= 1, beta > 0, 0 <= eps1 < 1/2");
    BeamGrid g;
    g.lambda = lambda;
    g.beta = beta;
    g.eps1 = eps1;
    g.N1 = int(std::lround(std::pow(lambda, 0.5 - eps1) / std::sqrt(beta)));
    g.N2 = int(std::lround(std::sqrt(lambda / beta)));
    if (g.N1 < 1 || g.N2 < 1) throw DomainError("build_beam_grid: grid is empty for these parameters");
    const double step1 = 2.0 * kPi / g.N1, step2 = 4.0 / g.N2;
    for (int m = 0; m < g.N1; ++m)
        g.directions.push_back({step1 * (m - 2.0 / 3.0), step1 * (m + 2.0 / 3.0), step1 * m});
    for (int n = 0; n <= g.N2; ++n) {
        const double c = step2 * (n - 0.5 * g.N2);
        g.offsets.push_back({c - step2 * 2.0 / 3.0, c + step2 * 2.0 / 3.0, c});
    }
    return g;
}

bool tube_contains(const TubeSpec& tube, const H3Point& p) {
    return inside(act_h3(tube.base.inverse(), p), tube.delta, tube.T);
}

SegmentExtent segment_extent(const GroupElement& g, const GroupElement& base, double halflen) {
    const GroupElement e = base.inverse() * g;
    SegmentExtent out;
    for (int i = 0; i < kSegmentSamples; ++i) {
        const H3Point q = act_h3(e, H3Point{0.0, std::exp(sample_t(i, halflen))});
        out.radius = std::max(out.radius, std::abs(q.z));
        out.height = std::max(out.height, std::abs(std::log(q.height)));
    }
    return out;
}

bool segment_in_tube(const GroupElement& g, const TubeSpec& tube, double halflen, double c0) {
    if (!g.finite() || dist(GroupElement::identity(), g) > c0)
        throw DomainError("segment_in_tube: dist(g, e) exceeds the bound " + std::to_string(c0));
    if (!(halflen > 0.0)) throw DomainError("segment_in_tube: half-length must be positive");
    return segment_inside(tube.base.inverse() * g, tube.delta, tube.T, halflen);
}

int count_tube_beams(const TubeSpec& tube, const BeamGrid& grid) {
    const GroupElement inv = tube.base.inverse();
    int count = 0;
    for (int m = 0; m < grid.N1; ++m)
        for (int n = 0; n <= grid.N2; ++n)
            if (segment_inside(inv * grid.element(m, n), tube.delta, tube.T, 1.0)) ++count;
    return count;
}

double dist_to_ma_fast(const GroupElement& h) {
    if (std::abs(h.a) > 1e-8 && std::abs(h.d) > 1e-8) {
        const cplx w = std::sqrt(h.a / h.d);
        const GroupElement hn{h.a / w, h.b / w, h.c * w, h.d * w};
        if (dist(GroupElement::identity(), hn) < 0.5) {
            auto f = [&](const std::vector<double>& p) {
                const cplx v = std::exp(cplx(0.5 * p[0], p[1]));
                return dist(hn, GroupElement{v, 0.0, 0.0, 1.0 / v});
            };
            double fmin = 0.0;
            minimize(f, {0.0, 0.0}, 0.01, 1e-12, 4000, &fmin);
            return fmin;
        }
    }
    return dist_to_subgroup(h, Subgroup::MA);
}

double dist_to_mprime(const GroupElement& k) {
    const GroupElement w0inv = w0_elem().inverse();
    double best = std::numeric_limits<double>::infinity();
    for (const GroupElement& h : {k, w0inv * k}) {
        auto f = [&](double phi) { return dist(h, m_elem(phi)); };
        const int scan = 64;
        int arg = 0;
        double low = std::numeric_limits<double>::infinity();
        for (int i = 0; i < scan; ++i) {
            const double v = f(kPi * i / scan);
            if (v < low) {
                low = v;
                arg = i;
            }
        }
        double fmin = low;
        line_minimize(f, kPi * (arg - 1) / scan, kPi * (arg + 1) / scan, &fmin);
        best = std::min({best, low, fmin});
    }
    return best;
}

long count_quadruples(const GroupElement& g, double delta, const BeamGrid& grid, double c0) {
    if (!g.finite() || dist(GroupElement::identity(), g) > c0)
        throw DomainError("count_quadruples: dist(g, e) exceeds the bound " + std::to_string(c0));
    if (delta < 0.0) throw DomainError("count_quadruples: delta must be nonnegative");
    if (long(grid.N1) * long(grid.N2) > 10000)
        throw ResourceError("count_quadruples: N1 N2 exceeds 10^4; use a sampled estimate");
    std::vector<GroupElement> left, right;
    for (int m = 0; m < grid.N1; ++m)
        for (int n = 0; n <= grid.N2; ++n) {
            const GroupElement bn = grid.element(m, n);
            left.push_back(bn.inverse() * g);
            right.push_back(bn);
        }
    // h = m E with |E - I| <= e^{sqrt 2 delta} - 1 entrywise, so |h11 h21| and |h12 h22| are small.
    const double eps = std::expm1(std::sqrt(2.0) * delta);
    const double gate = eps * (1.0 + eps) + 1e-12;
    std::vector<long> per_row(left.size(), 0);
    parallel_for(left.size(), [&](std::size_t i) {
        long c = 0;
        for (const GroupElement& r : right) {
            const GroupElement h = left[i] * r;
            if (std::abs(h.a * h.c) > gate || std::abs(h.b * h.d) > gate) continue;
            if (dist_to_ma_fast(h) <= delta) ++c;
        }
        per_row[i] = c;
    });
    long total = 0;
    for (long c : per_row) total += c;
    return total;
}

std::string to_string(PairKind kind) {
    switch (kind) {
        case PairKind::OrientationPreserving: return "orientation-preserving";
        case PairKind::OrientationReversing: return "orientation-reversing";
        case PairKind::Neither: return "neither";
    }
    return "neither";
}

PairClassification close_pair_classify(const BoundaryPoint& b1, double x1, const BoundaryPoint& b2, double x2,
                                       double delta) {
    const GroupElement h = (b1.element() * n_elem(x1)).inverse() * b2.element() * n_elem(x2);
    PairClassification out;
    out.dist_ma = dist_to_ma_fast(h);
    out.dist_w0ma = dist_to_ma_fast(w0_elem().inverse() * h);
    const GroupElement rel = b1.element().inverse() * b2.element();
    if (out.dist_ma <= delta && out.dist_ma <= out.dist_w0ma) {
        out.kind = PairKind::OrientationPreserving;
        out.direction_gap = dist(b1.element(), b2.element());
        out.offset_gap = std::abs(x1 - x2);
    } else if (out.dist_w0ma <= delta) {
        out.kind = PairKind::OrientationReversing;
        // h11 = cos + x1 sin and h22 = cos - x2 sin vanish for b1^{-1} b2 = so2(phi) with cot phi = x2.
        const double r = 1.0 / std::sqrt(1.0 + x2 * x2);
        const GroupElement target{x2 * r, r, -r, x2 * r};
        out.direction_gap = dist(rel, target);  // dist works on PSL, covering the +- ambiguity
        out.offset_gap = std::abs(x1 + x2);
    }
    return out;
}

GroupElement NearH2Decomposition::reassemble() const { return k1 * n_elem(z) * m_elem(theta) * a_elem(t) * k2; }

double plane_distance(const GroupElement& g) {
    // Distance from (z, h) to the vertical plane over the real axis is asinh(|Im z| / h).
    auto f = [&](const std::vector<double>& p) {
        const H3Point q = act_h3(g * so2_elem(p[0]) * a_elem(p[1]), H3Point{});
        return std::asinh(std::abs(q.z.imag()) / q.height);
    };
    std::vector<std::pair<double, std::vector<double>>> seeds;
    for (int i = 0; i < 24; ++i)
        for (int j = 0; j <= 16; ++j) {
            std::vector<double> p{kPi * i / 24.0, 0.5 * j};
            seeds.emplace_back(f(p), p);
        }
    std::partial_sort(seeds.begin(), seeds.begin() + 3, seeds.end(),
                      [](const auto& x, const auto& y) { return x.first < y.first; });
    double best = seeds.front().first;
    for (int i = 0; i < 3; ++i) {
        double fmin = 0.0;
        minimize(f, seeds[std::size_t(i)].second, 0.05, 1e-13, 4000, &fmin);
        best = std::min(best, fmin);
    }
    return best;
}

NearH2Decomposition decompose_near_h2(const GroupElement& g, double c0) {
    if (!g.finite() || dist(GroupElement::identity(), g) > c0)
        throw DomainError("decompose_near_h2: dist(g, e) exceeds the bound " + std::to_string(c0));
    NearH2Decomposition out;
    // Boundary points [x : y] of the real circle whose g^{-1}-image is real: A x^2 + B x y + C y^2 = 0.
    const double A = (-g.d * std::conj(g.c)).imag();
    const double B = (g.d * std::conj(g.a) + g.b * std::conj(g.c)).imag();
    const double C = (-g.b * std::conj(g.a)).imag();
    const double scale = std::max({std::abs(A), std::abs(B), std::abs(C)});
    const double D = B * B - 4.0 * A * C;
    const bool in_hprime = scale <= 1e-12 * frob2(g);
    if (!in_hprime && D < -1e-12 * scale * scale) {
        out.positive_distance = true;
        out.plane_distance = plane_distance(g);
        return out;
    }
    const bool tangent = !in_hprime && std::abs(D) <= 1e-12 * scale * scale;

    GroupElement rest = g;
    if (!in_hprime) {
        const double root = std::sqrt(std::max(D, 0.0));
        const double num = -B + (B >= 0.0 ? -root : root);
        double x, y;
        if (std::abs(A) >= std::abs(C)) {
            x = num;
            y = 2.0 * A;
        } else {
            x = 2.0 * C;
            y = num;
        }
        double phi1 = std::atan2(-y, x);
        if (phi1 < 0.0) phi1 += kPi;
        out.k1 = so2_elem(phi1);
        const GroupElement g1 = out.k1.inverse() * g;

        // g1 sends the real point [d : -c] to infinity; rotate it there so the product is upper triangular.
        const cplx ph = std::abs(g1.d) >= std::abs(g1.c) ? std::conj(g1.d) / std::abs(g1.d)
                                                         : std::conj(g1.c) / std::abs(g1.c);
        const double phis = std::atan2((g1.c * ph).real(), (g1.d * ph).real());
        const GroupElement g2 = g1 * so2_elem(phis);
        const cplx u = g2.a / g2.d, p = g2.b / g2.d;  // g2 H2 has boundary line p + u R

        double theta = 0.5 * std::arg(u);
        theta = std::fmod(theta + kPi, 0.5 * kPi);
        if (tangent) theta = 0.0;
        out.theta = theta;
        const cplx dir = std::polar(1.0, 2.0 * theta);
        if (tangent) {
            out.z = cplx(0.0, (p * std::conj(dir)).imag());
        } else {
            out.z = (p - dir * ((p.imag()) / dir.imag())).real();
        }
        rest = m_elem(theta).inverse() * n_elem(out.z).inverse() * g1;
    }

    // rest lies in H' = SL(2,R) u w0 SL(2,R): Iwasawa there gives n(x) a(t) k2 with k2 in SO(2) u w0 SO(2).
    const double im = std::abs(rest.a.imag()) + std::abs(rest.b.imag()) + std::abs(rest.c.imag()) + std::abs(rest.d.imag());
    const double re = std::abs(rest.a.real()) + std::abs(rest.b.real()) + std::abs(rest.c.real()) + std::abs(rest.d.real());
    const bool flipped = im > re;
    GroupElement real_part = flipped ? rest * w0_elem().inverse() : rest;
    real_part = GroupElement{real_part.a.real(), real_part.b.real(), real_part.c.real(), real_part.d.real()};
    if (real_part.det().real() < 0.0) real_part = {real_part.a, real_part.b, -real_part.c, -real_part.d};
    const IwasawaCoords iw = iwasawa_decompose(real_part.normalized());
    out.z += std::polar(1.0, 2.0 * out.theta) * iw.z.real();
    out.t = iw.t;
    out.k2 = flipped ? iw.k * w0_elem() : iw.k;
    if (out.reassemble().max_diff(g) > (-out.reassemble()).max_diff(g)) out.k2 = -out.k2;
    return out;
}

bool plane_segment_in_tube(const GroupElement& g, const TubeSpec& tube) {
    const GroupElement e = tube.base.inverse() * g;  // plane in tube coordinates
    const GroupElement einv = e.inverse();
    if (tube.T < 1.0) return false;
    const int steps = std::max(1, int(std::floor(8.0 * (tube.T - 1.0))));
    for (int k = 0; k <= steps; ++k) {
        const double t0 = tube.T > 1.0 ? -(tube.T - 1.0) + 2.0 * (tube.T - 1.0) * k / steps : 0.0;
        const H3Point lo = project_to_h2(act_h3(einv, H3Point{0.0, std::exp(t0 - 1.0)}));
        const H3Point hi = project_to_h2(act_h3(einv, H3Point{0.0, std::exp(t0 + 1.0)}));
        const auto P = to_hyperboloid(lo.z.real(), lo.height);
        const auto Q = to_hyperboloid(hi.z.real(), hi.height);
        const double L = h3_distance(lo, hi);
        if (L < 1e-9) continue;
        const double sl = std::sinh(L);
        bool ok = true;
        for (int i = 0; i < kSegmentSamples && ok; ++i) {
            const double s = 0.5 * L + sample_t(i, 1.0);
            std::array<double, 3> X;
            for (int c = 0; c < 3; ++c) X[c] = (std::sinh(L - s) * P[c] + std::sinh(s) * Q[c]) / sl;
            double x, y;
            from_hyperboloid(X, &x, &y);
            ok = inside(act_h3(e, H3Point{x, y}), tube.delta, tube.T);
        }
        if (ok) return true;
    }
    return false;
}

int count_plane_beams(const GroupElement& g, double delta, double T, const BeamGrid& grid) {
    std::vector<int> hits(grid.size(), 0);
    parallel_for(grid.size(), [&](std::size_t i) {
        const int m = int(i / grid.offsets.size()), n = int(i % grid.offsets.size());
        hits[i] = plane_segment_in_tube(g, TubeSpec(grid.element(m, n), delta, T)) ? 1 : 0;
    });
    int total = 0;
    for (int h : hits) total += h;
    return total;
}

GroupElement random_near_mprime_a(std::mt19937_64& rng, double offset) {
    std::uniform_real_distribution<double> ang(0.0, kPi), tt(-1.0, 1.0), coin(0.0, 1.0);
    GroupElement g = m_elem(ang(rng)) * a_elem(tt(rng)) * exp_sl2(random_traceless(rng, offset, false));
    if (coin(rng) < 0.5) g = w0_elem() * g;
    return g;
}

GroupElement random_off_hprime(std::mt19937_64& rng, double omega) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), ang(0.0, kPi);
    const GroupElement h = n_elem(u(rng)) * a_elem(u(rng)) * so2_elem(ang(rng));
    const GroupElement y = random_traceless(rng, omega, true);
    const cplx i(0.0, 1.0);
    return h * exp_sl2(GroupElement{i * y.a, i * y.b, i * y.c, i * y.d});
}

std::string CountRow::csv_header() { return "seed,lambda,beta,eps1,delta,omega,count,bound,ratio"; }

std::string CountRow::csv() const {
    std::ostringstream os;
    os.precision(10);
    os << seed << ',' << lambda << ',' << beta << ',' << eps1 << ',' << delta << ',' << omega << ',' << count << ','
       << bound << ',' << ratio;
    return os.str();
}

std::vector<CountRow> tube_count_experiment(std::uint64_t seed, int tubes, double delta, double T,
                                            const BeamGrid& grid) {
    std::vector<CountRow> rows(std::size_t(std::max(tubes, 0)));
    parallel_for(rows.size(), [&](std::size_t i) {
        auto rng = sample_rng(seed, i);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_int_distribution<int> pm(0, grid.N1 - 1), pn(0, grid.N2);
        double theta, x;
        if (u01(rng) < 0.5) {
            theta = grid.directions[std::size_t(pm(rng))].center;
            x = grid.x(pn(rng));
        } else {
            theta = 2.0 * kPi * u01(rng);
            x = -2.0 + 4.0 * u01(rng);
        }
        const GroupElement base = b_elem(theta) * n_elem(x) * a_elem(u01(rng) - 0.5) *
                                  exp_sl2(random_traceless(rng, 0.5 * delta * u01(rng), false));
        CountRow& row = rows[i];
        row.seed = seed;
        row.lambda = grid.lambda;
        row.beta = grid.beta;
        row.eps1 = grid.eps1;
        row.delta = delta;
        row.count = count_tube_beams(TubeSpec(base, delta, T), grid);
        row.bound = (1.0 + delta * grid.N1) * (1.0 + delta * grid.N2);
        row.ratio = double(row.count) / row.bound;
    });
    return rows;
}

InclusionReport inclusion_experiment(std::uint64_t seed, int samples, double offset) {
    const std::size_t count = std::size_t(std::max(samples, 0));
    std::vector<double> fwd(count), conv(count), height(count);
    parallel_for(count, [&](std::size_t i) {
        auto rng = sample_rng(seed, i);
        const GroupElement g = random_near_mprime_a(rng, offset);
        const double d = dist_to_subgroup(g, Subgroup::MprimeA);
        const SegmentExtent ext = segment_extent(g, GroupElement::identity(), 1.0);
        fwd[i] = ext.radius / d;
        conv[i] = d / ext.radius;
        height[i] = ext.height;
    });
    InclusionReport rep;
    rep.samples = samples;
    for (int i = 0; i < samples; ++i) {
        rep.forward_constant = std::max(rep.forward_constant, fwd[std::size_t(i)]);
        rep.converse_constant = std::max(rep.converse_constant, conv[std::size_t(i)]);
        rep.max_height = std::max(rep.max_height, height[std::size_t(i)]);
    }
    return rep;
}

double tube_rotation_constant(std::uint64_t seed, int rotations, int points, double delta, double T) {
    std::vector<double> worst(std::size_t(rotations), 0.0);
    parallel_for(worst.size(), [&](std::size_t r) {
        auto rng = sample_rng(seed, r);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const double psi = 2.0 * kPi * u01(rng);
        const double rho = delta / std::sqrt(2.0);  // |r1 X1 + r2 X2| = sqrt(2) rho
        GroupElement k = m_elem(kPi * u01(rng)) * exp_k(rho * std::cos(psi), rho * std::sin(psi));
        if (u01(rng) < 0.5) k = w0_elem() * k;
        const double dk = dist_to_mprime(k);
        double c = 0.0;
        for (int j = 0; j < points; ++j) {
            const cplx z = std::polar(dk * std::sqrt(u01(rng)), 2.0 * kPi * u01(rng));
            const double t = T * (u01(rng) - 0.5);
            const H3Point q = act_h3(k, H3Point{z, std::exp(t)});
            if (std::abs(std::log(q.height)) > T) c = std::numeric_limits<double>::infinity();
            c = std::max(c, std::abs(q.z) / dk);
        }
        worst[r] = c;
    });
    return *std::max_element(worst.begin(), worst.end());
}

double tube_enlargement_constant(std::uint64_t seed, int instances, int points, double delta, double T) {
    std::vector<double> worst(std::size_t(instances), 0.0);
    parallel_for(worst.size(), [&](std::size_t r) {
        auto rng = sample_rng(seed, r);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        // h = g^{-1} must carry l_[-1,1] into T_delta^T(l, o).
        GroupElement h;
        double offset = delta;
        do {
            h = random_near_mprime_a(rng, offset);
            offset *= 0.5;
            const SegmentExtent ext = segment_extent(h, GroupElement::identity(), 1.0);
            if (ext.radius <= delta && ext.height <= T) break;
        } while (true);
        const GroupElement g = h.inverse();
        double c = 0.0;
        for (int j = 0; j < points; ++j) {
            const cplx z = std::polar(delta * std::sqrt(u01(rng)), 2.0 * kPi * u01(rng));
            const double t = T * (2.0 * u01(rng) - 1.0);
            const H3Point q = act_h3(g, H3Point{z, std::exp(t)});
            c = std::max({c, std::abs(q.z) / delta, std::abs(std::log(q.height)) / T});
        }
        worst[r] = c;
    });
    return *std::max_element(worst.begin(), worst.end());
}

}  // namespace hyperlap
