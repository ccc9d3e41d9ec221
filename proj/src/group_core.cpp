#include "hyperlap/group_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "hyperlap/errors.hpp"

namespace hyperlap {

namespace {
constexpr cplx I1{0.0, 1.0};

double sq(const cplx& z) { return std::norm(z); }
}  // namespace

GroupElement GroupElement::normalized() const {
    const cplx dt = det();
    if (std::abs(dt - 1.0) <= 1e-12) return *this;
    const cplx r = std::sqrt(dt);
    return {a / r, b / r, c / r, d / r};
}

bool GroupElement::finite() const {
    for (const cplx& z : {a, b, c, d})
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

double GroupElement::max_diff(const GroupElement& o) const {
    return std::max({std::abs(a - o.a), std::abs(b - o.b), std::abs(c - o.c), std::abs(d - o.d)});
}

double GroupElement::unitarity_defect() const {
    GroupElement p = adjoint() * (*this);
    return p.max_diff(identity());
}

GroupElement operator*(const GroupElement& x, const GroupElement& y) {
    GroupElement r{x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
                   x.c * y.b + x.d * y.d};
    return r.normalized();
}

GroupElement n_elem(cplx z) { return {1.0, z, 0.0, 1.0}; }

GroupElement a_elem(double t) { return {std::exp(0.5 * t), 0.0, 0.0, std::exp(-0.5 * t)}; }

GroupElement m_elem(double theta) { return {std::polar(1.0, theta), 0.0, 0.0, std::polar(1.0, -theta)}; }

GroupElement so2_elem(double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    return {c, s, -s, c};
}

GroupElement b_elem(double theta) { return so2_elem(0.5 * theta); }

GroupElement w0_elem() { return {0.0, I1, I1, 0.0}; }

GroupElement k_rho_elem(double rho) {
    const double p = std::sqrt(0.5 * (1.0 + rho));
    const double q = std::sqrt(0.5 * (1.0 - rho));
    return {p, I1 * q, I1 * q, p};
}

BoundaryPoint BoundaryPoint::canonical(double theta) {
    double t = std::fmod(theta, 2.0 * kPi);
    if (t < 0.0) t += 2.0 * kPi;
    if (t >= 2.0 * kPi) t = 0.0;
    return {t};
}

GroupElement LieVector::matrix() const {
    const cplx z1 = I1 * x3 + 0.5 * h;
    const cplx z2 = I1 * x1 - x2 + x;
    const cplx z3 = I1 * x1 + x2;
    return {z1, z2, z3, -z1};
}

double LieVector::norm() const { return sl2_norm(matrix()); }

double sl2_norm(const GroupElement& m) {
    const cplx z1 = 0.5 * (m.a - m.d);
    return std::sqrt(sq(z1) + sq(m.b) + sq(m.c));
}

GroupElement exp_sl2(const GroupElement& z) {
    const cplx mu = std::sqrt(-(z.a * z.d - z.b * z.c));
    cplx ch = std::cosh(mu);
    cplx sh_over = std::abs(mu) < 1e-6 ? cplx(1.0) + mu * mu / 6.0 : std::sinh(mu) / mu;
    GroupElement r{ch + sh_over * z.a, sh_over * z.b, sh_over * z.c, ch + sh_over * z.d};
    return r.normalized();
}

GroupElement log_sl2(const GroupElement& g0) {
    GroupElement g = g0;
    if ((g.a + g.d).real() < 0.0) g = -g;
    const cplx half_tr = 0.5 * (g.a + g.d);
    const cplx mu = std::acosh(half_tr);
    const cplx factor = std::abs(mu) < 1e-5 ? cplx(1.0) - mu * mu / 6.0 : mu / std::sinh(mu);
    return {factor * (g.a - half_tr), factor * g.b, factor * g.c, factor * (g.d - half_tr)};
}

IwasawaCoords iwasawa_decompose(const GroupElement& g) {
    if (!g.finite()) throw DomainError("iwasawa_decompose: non-finite entries");
    const double r2 = sq(g.c) + sq(g.d);
    IwasawaCoords out;
    out.t = -std::log(r2);
    out.z = (g.a * std::conj(g.c) + g.b * std::conj(g.d)) / r2;
    out.k = kappa(g);
    return out;
}

double iwasawa_A(const GroupElement& g) {
    if (!g.finite()) throw DomainError("iwasawa_A: non-finite entries");
    return -std::log(sq(g.c) + sq(g.d));
}

GroupElement kappa(const GroupElement& g) {
    const double s = 1.0 / std::sqrt(sq(g.c) + sq(g.d));
    return {s * std::conj(g.d), -s * std::conj(g.c), s * g.c, s * g.d};
}

H3Point act_h3(const GroupElement& g, const H3Point& p) {
    if (!(p.height > 0.0)) throw DomainError("act_h3: height must be positive");
    const cplx czd = g.c * p.z + g.d;
    const double h2 = p.height * p.height;
    const double den = sq(czd) + sq(g.c) * h2;
    H3Point out;
    out.z = ((g.a * p.z + g.b) * std::conj(czd) + g.a * std::conj(g.c) * h2) / den;
    out.height = p.height / den;
    return out;
}

double h3_distance(const H3Point& p, const H3Point& q) {
    const double num = sq(p.z - q.z) + (p.height - q.height) * (p.height - q.height);
    const double x = num / (2.0 * p.height * q.height);
    // acosh(1 + x) written to stay accurate for small x
    return std::log1p(x + std::sqrt(x * (x + 2.0)));
}

GroupElement phi_action(const GroupElement& g, const GroupElement& k) { return kappa(k * g); }

PsiTheta psi_theta(const GroupElement& k) {
    if (k.unitarity_defect() > 1e-8) throw DomainError("psi_theta: input is not unitary");
    const cplx al = k.a, be = k.b;
    return {2.0 * (al * std::conj(be)).real(), sq(al) - sq(be)};
}

GroupElement exp_k(double r1, double r2) {
    const double r = std::hypot(r1, r2);
    const double sinc = r < 1e-8 ? 1.0 - r * r / 6.0 : std::sin(r) / r;
    const double c = std::cos(r);
    return {c, cplx(-r2, r1) * sinc, cplx(r2, r1) * sinc, c};
}

double dist(const GroupElement& g, const GroupElement& h) {
    GroupElement m = g.inverse() * h;
    if ((m.a + m.d).real() < 0.0) m = -m;
    const GroupElement diff{m.a - 1.0, m.b, m.c, m.d - 1.0};
    const double first_order = std::sqrt(0.25 * sq(diff.a - diff.d) + sq(diff.b) + sq(diff.c));
    if (first_order < 1e-4) return first_order;
    return sl2_norm(log_sl2(m));
}

namespace {

using Objective = std::function<double(const std::vector<double>&)>;

double refine_best(const Objective& f, const std::vector<std::vector<double>>& seeds, double step) {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) scored.emplace_back(f(seeds[i]), i);
    const std::size_t keep = std::min<std::size_t>(3, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + keep, scored.end());
    double best = scored.front().first;
    for (std::size_t i = 0; i < keep; ++i) {
        double fmin = 0.0;
        minimize(f, seeds[scored[i].second], step, 1e-10, 4000, &fmin);
        best = std::min(best, fmin);
    }
    return best;
}

double dist_ma(const GroupElement& g) {
    Objective f = [&](const std::vector<double>& p) {
        const cplx w = std::exp(cplx(0.5 * p[0], p[1]));
        return dist(g, GroupElement{w, 0.0, 0.0, 1.0 / w});
    };
    std::vector<std::vector<double>> seeds;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j <= 40; ++j) seeds.push_back({-10.0 + 0.5 * j, kPi * i / 16.0});
    for (const cplx& w : {g.a, 1.0 / g.d}) {
        if (std::abs(w) > 1e-12 && std::isfinite(std::abs(w)))
            seeds.push_back({2.0 * std::log(std::abs(w)), std::arg(w)});
    }
    return refine_best(f, seeds, 0.05);
}

double dist_h0(const GroupElement& g) {
    Objective f = [&](const std::vector<double>& p) {
        return dist(g, n_elem(p[0]) * a_elem(p[1]) * so2_elem(p[2]));
    };
    const IwasawaCoords iw = iwasawa_decompose(g);
    const double phi0 = std::atan2(iw.k.b.real(), iw.k.a.real());
    std::vector<std::vector<double>> seeds;
    for (int dx = -2; dx <= 2; ++dx)
        for (int dt = -1; dt <= 1; ++dt)
            for (int k = 0; k < 8; ++k)
                seeds.push_back({iw.z.real() + dx, iw.t + dt, kPi * k / 8.0});
    seeds.push_back({iw.z.real(), iw.t, phi0});
    return refine_best(f, seeds, 0.05);
}

double dist_k0(const GroupElement& g) {
    // Polar seed: unitary factor of g = U P.
    const GroupElement gg = g.adjoint() * g;
    const double tr = (gg.a + gg.d).real();
    const double s = std::sqrt(std::max(0.0, tr + 2.0));
    // (g* g)^{1/2} = (g* g + I) / sqrt(tr + 2) for positive unimodular 2x2.
    GroupElement root{(gg.a + 1.0) / s, gg.b / s, gg.c / s, (gg.d + 1.0) / s};
    const GroupElement u = g * root.inverse();
    Objective f = [&](const std::vector<double>& p) {
        LieVector y;
        y.x1 = p[0];
        y.x2 = p[1];
        y.x3 = p[2];
        return dist(g, u * exp_sl2(y.matrix()));
    };
    return refine_best(f, {{0.0, 0.0, 0.0}}, 0.02);
}

}  // namespace

double dist_to_subgroup(const GroupElement& g, Subgroup which) {
    if (!g.finite() || dist(GroupElement::identity(), g) > 10.0)
        throw DomainError("dist_to_subgroup: element outside the bounded set dist(g, e) <= 10");
    const GroupElement w0inv = w0_elem().inverse();
    switch (which) {
        case Subgroup::MA: return dist_ma(g);
        case Subgroup::MprimeA: return std::min(dist_ma(g), dist_ma(w0inv * g));
        case Subgroup::Hprime: return std::min(dist_h0(g), dist_h0(w0inv * g));
        case Subgroup::K0: return dist_k0(g);
    }
    throw DomainError("dist_to_subgroup: unknown subgroup");
}

GroupElement random_element(std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> n01(0.0, scale);
    GroupElement z;
    z.a = cplx(n01(rng), n01(rng));
    z.d = -z.a;
    z.b = cplx(n01(rng), n01(rng));
    z.c = cplx(n01(rng), n01(rng));
    return exp_sl2(z);
}

GroupElement random_unitary(std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::array<double, 4> q{n01(rng), n01(rng), n01(rng), n01(rng)};
    const double r = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    const cplx al(q[0] / r, q[1] / r), be(q[2] / r, q[3] / r);
    return {al, be, -std::conj(be), std::conj(al)};
}

}  // namespace hyperlap
