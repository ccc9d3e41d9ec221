#include "hyperlap/oscillatory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperlap/errors.hpp"
#include "hyperlap/special_functions.hpp"

namespace hyperlap {

namespace {

/** @brief Gauss nodes and weights on [a, b] split into equal panels no wider than width. */
struct NodeSet {
    std::vector<double> t, w;
    std::size_t panels = 0;
};

NodeSet panel_nodes(double a, double b, double width, const GaussRule& rule) {
    NodeSet out;
    if (!(b > a)) return out;
    out.panels = std::max<std::size_t>(1, std::size_t(std::ceil((b - a) / width)));
    const double h = (b - a) / double(out.panels);
    out.t.reserve(out.panels * rule.nodes.size());
    out.w.reserve(out.panels * rule.nodes.size());
    for (std::size_t p = 0; p < out.panels; ++p) {
        const double lo = a + h * double(p);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            out.t.push_back(lo + 0.5 * h * (rule.nodes[i] + 1.0));
            out.w.push_back(0.5 * h * rule.weights[i]);
        }
    }
    return out;
}

double panel_width(double frequency, const OscillatoryOptions& opt) {
    return opt.periods_per_panel * 2.0 * kPi / std::max(frequency, 1.0);
}

void finish(OscillatoryResult& res, cplx v15) {
    res.est_error = std::abs(res.value - v15);
    res.below_noise = res.est_error > 0.05 * std::abs(res.value);
}

/** @brief cosh d - 1 for the point n(x) a(t) o of H2. */
double h2_cosh_minus_one(double x, double t) {
    const double e = std::exp(t);
    const double em1 = std::expm1(t);
    return (x * x + em1 * em1) / (2.0 * e);
}

double acosh1p(double u) {
    u = std::max(u, 0.0);
    return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

/** @brief Half-width in x of the disk d(n(x) a(t) o, o) < 1 at height t (0 if the row misses it). */
double disk_halfwidth(double t) {
    const double em1 = std::expm1(t);
    const double v = 2.0 * std::exp(t) * (std::cosh(1.0) - 1.0) - em1 * em1;
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

void check_J_domain(double r, double rho) {
    if (!(r >= 20.0) || !std::isfinite(r)) throw DomainError("eval_J_rho: r must be >= 20");
    if (!(rho >= 0.0 && rho <= 0.9)) throw DomainError("eval_J_rho: rho must lie in [0, 0.9]");
}

/** @brief (x, t) nodes of the cutoff disk with the amplitude b(d) e^{-t/2} e^{-i rho r t} folded into the weight. */
struct PlaneNodes {
    std::vector<double> x, t, d;
    std::vector<cplx> w;
    std::size_t panels = 0;
};

PlaneNodes plane_nodes(double r, double rho, const OscillatoryOptions& opt, const GaussRule& rule) {
    PlaneNodes out;
    const auto tn = panel_nodes(-1.0, 1.0, panel_width(r * (1.0 + rho), opt), rule);
    out.panels = tn.panels;
    for (std::size_t j = 0; j < tn.t.size(); ++j) {
        const double t = tn.t[j];
        const double half = disk_halfwidth(t);
        if (half <= 0.0) continue;
        const auto xn = panel_nodes(-half, half, panel_width(r * std::exp(-t), opt), rule);
        out.panels += xn.panels;
        const cplx row = tn.w[j] * std::exp(-0.5 * t) * std::polar(1.0, -rho * r * t);
        for (std::size_t i = 0; i < xn.t.size(); ++i) {
            const double d = acosh1p(h2_cosh_minus_one(xn.t[i], t));
            const double b = inner_cutoff(d);
            if (b == 0.0) continue;
            out.x.push_back(xn.t[i]);
            out.t.push_back(t);
            out.d.push_back(d);
            out.w.push_back(row * (xn.w[i] * b));
        }
    }
    return out;
}

cplx reduced_sum(double r, const PlaneNodes& nodes, double* magnitude) {
    std::vector<cplx> terms(nodes.w.size());
    double mag = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        terms[i] = nodes.w[i] * spherical_h3_closed(r, nodes.d[i]);
        mag += std::abs(terms[i]);
    }
    if (magnitude) *magnitude = mag;
    std::vector<double> re(terms.size()), im(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        re[i] = terms[i].real();
        im[i] = terms[i].imag();
    }
    return {pairwise_sum(re.data(), re.size()), pairwise_sum(im.data(), im.size())};
}

}  // namespace

double inner_cutoff(double d) { return smooth_plateau(d, 0.5, 1.0); }

OscillatoryResult eval_J_rho(double r, double rho, const OscillatoryOptions& opt) {
    check_J_domain(r, rho);
    OscillatoryResult res;
    res.params = {{"r", r}, {"rho", rho}};
    const auto n20 = plane_nodes(r, rho, opt, gauss20());
    if (double(n20.w.size()) > opt.max_evaluations)
        throw ResourceError("eval_J_rho: node count exceeds the evaluation budget", 0.0);
    res.value = reduced_sum(r, n20, &res.magnitude);
    res.panels = n20.panels;
    res.evaluations = n20.w.size();
    if (opt.estimate_error) {
        const auto n15 = plane_nodes(r, rho, opt, gauss15());
        finish(res, reduced_sum(r, n15, nullptr));
        res.evaluations += n15.w.size();
    }
    return res;
}

OscillatoryResult eval_J_rho_direct(double r, double rho, const OscillatoryOptions& opt) {
    check_J_domain(r, rho);
    OscillatoryResult res;
    res.params = {{"r", r}, {"rho", rho}};
    const auto plane = plane_nodes(r, rho, opt, gauss20());
    const double chart = kPi / 3.0;
    // |d/ds A| stays below about 2 on the support of the cutoff.
    const auto sn = panel_nodes(-chart, chart, panel_width(2.0 * r, opt), gauss20());
    struct KNode {
        cplx k21, k22;
        double weight;
    };
    std::vector<KNode> knodes;
    const GroupElement w0 = w0_elem();
    for (int side = 0; side < 2; ++side) {
        for (std::size_t i = 0; i < sn.t.size(); ++i) {
            for (std::size_t j = 0; j < sn.t.size(); ++j) {
                const double s1 = sn.t[i], s2 = sn.t[j];
                const double rad = std::hypot(s1, s2);
                if (rad >= chart) continue;
                GroupElement k = exp_k(s1, s2);
                if (side == 1) k = k * w0;
                const double north = smooth_step(psi_theta(k).theta + 0.5);
                const double part = side == 0 ? north : 1.0 - north;
                if (part == 0.0) continue;
                const double jac = rad > 1e-12 ? std::sin(2.0 * rad) / (2.0 * kPi * rad) : 1.0 / kPi;
                knodes.push_back({k.c, k.d, sn.w[i] * sn.w[j] * jac * part});
            }
        }
    }
    res.panels = plane.panels + 2 * sn.panels * sn.panels;
    const double total = double(knodes.size()) * double(plane.w.size());
    res.evaluations = std::size_t(total);
    // Per-point constants: e^t, e^{-t} and x.
    std::vector<double> et(plane.t.size()), emt(plane.t.size());
    for (std::size_t p = 0; p < plane.t.size(); ++p) {
        et[p] = std::exp(plane.t[p]);
        emt[p] = 1.0 / et[p];
    }
    std::vector<cplx> partial(knodes.size());
    std::vector<double> pmag(knodes.size(), 0.0);
    const std::size_t allowed =
        total > opt.max_evaluations ? std::size_t(opt.max_evaluations / double(plane.w.size())) : knodes.size();
    parallel_for(allowed, [&](std::size_t q) {
        const auto& kn = knodes[q];
        const double c2 = std::norm(kn.k21);
        cplx acc = 0.0;
        double m = 0.0;
        for (std::size_t p = 0; p < plane.w.size(); ++p) {
            const double height = c2 * et[p] + emt[p] * std::norm(kn.k21 * plane.x[p] + kn.k22);
            // e^{(1 + i r) A} with A = -log(height).
            acc += plane.w[p] * (std::polar(1.0, -r * std::log(height)) / height);
            m += std::abs(plane.w[p]) / height;
        }
        partial[q] = acc * kn.weight;
        pmag[q] = m * kn.weight;
    });
    cplx sum = 0.0;
    for (std::size_t q = 0; q < allowed; ++q) sum += partial[q];
    if (allowed < knodes.size())
        throw ResourceError("eval_J_rho_direct: " + std::to_string(total) + " evaluations exceed the budget",
                            std::abs(sum));
    res.value = sum;
    res.magnitude = pairwise_sum(pmag.data(), pmag.size());
    return res;
}

double critical_phase(double rho, const double v[4]) {
    const GroupElement g = exp_k(v[2], v[3]) * k_rho_elem(rho) * n_elem(v[0]) * a_elem(v[1]);
    return iwasawa_A(g) - rho * v[1];
}

std::array<std::array<double, 4>, 4> hessian_closed_form(double rho) {
    const double q = std::sqrt(1.0 - rho * rho);
    return {{{-(1.0 - rho), 0.0, 0.0, -2.0},
             {0.0, -(1.0 - rho * rho), -2.0 * q, 0.0},
             {0.0, -2.0 * q, 0.0, 0.0},
             {-2.0, 0.0, 0.0, 0.0}}};
}

double det4(std::array<std::array<double, 4>, 4> m) {
    double det = 1.0;
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        if (m[piv][c] == 0.0) return 0.0;
        if (piv != c) {
            std::swap(m[piv], m[c]);
            det = -det;
        }
        det *= m[c][c];
        for (int r = c + 1; r < 4; ++r) {
            const double f = m[r][c] / m[c][c];
            for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
        }
    }
    return det;
}

HessianReport hessian_F(double rho, double h) {
    if (!(std::abs(rho) < 1.0)) throw DomainError("hessian_F: |rho| must be below 1");
    if (!(h > 0.0)) throw DomainError("hessian_F: step must be positive");
    HessianReport rep;
    rep.rho = rho;
    for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) {
            double acc = 0.0;
            for (int a = -1; a <= 1; a += 2) {
                for (int b = -1; b <= 1; b += 2) {
                    double v[4] = {0.0, 0.0, 0.0, 0.0};
                    v[i] += a * h;
                    v[j] += b * h;
                    acc += a * b * critical_phase(rho, v);
                }
            }
            rep.hessian[i][j] = rep.hessian[j][i] = acc / (4.0 * h * h);
        }
    }
    rep.det = det4(rep.hessian);
    rep.det_expected = 16.0 * (1.0 - rho * rho);
    const auto exact = hessian_closed_form(rho);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            rep.max_entry_error = std::max(rep.max_entry_error, std::abs(rep.hessian[i][j] - exact[i][j]));
    return rep;
}

CriticalPointReport critical_point_residual(double rho, const std::array<double, 4>& v, double h) {
    if (!(std::abs(rho) < 1.0)) throw DomainError("critical_point_residual: |rho| must be below 1");
    CriticalPointReport rep;
    double g2 = 0.0;
    for (int i = 0; i < 4; ++i) {
        double p[4] = {v[0], v[1], v[2], v[3]};
        double m[4] = {v[0], v[1], v[2], v[3]};
        p[i] += h;
        m[i] -= h;
        const double g = (critical_phase(rho, p) - critical_phase(rho, m)) / (2.0 * h);
        g2 += g * g;
    }
    rep.residual = std::sqrt(g2);
    const auto pt = psi_theta(k_rho_elem(rho));
    rep.psi = pt.psi;
    rep.theta = pt.theta;
    return rep;
}

KTilde::KTilde(const PwKernel& kernel, double s_max, const OscillatoryOptions& opt)
    : s_max_(std::abs(s_max)), estimate_(opt.estimate_error) {
    // The kernel's spectrum is concentrated within 50 of lambda.
    const double width = panel_width(kernel.lambda + 50.0 + s_max_, opt);
    const auto n20 = panel_nodes(0.0, 2.0, width, gauss20());
    panels_ = n20.panels;
    t20_ = n20.t;
    w20_.resize(t20_.size());
    parallel_for(t20_.size(), [&](std::size_t i) {
        const double t = t20_[i];
        w20_[i] = 2.0 * kPi * n20.w[i] * kernel(t) * smooth_plateau(t, 1.0, 2.0) * std::sinh(t);
    });
    if (estimate_) {
        const auto n15 = panel_nodes(0.0, 2.0, width, gauss15());
        t15_ = n15.t;
        w15_.resize(t15_.size());
        parallel_for(t15_.size(), [&](std::size_t i) {
            const double t = t15_[i];
            w15_[i] = 2.0 * kPi * n15.w[i] * kernel(t) * smooth_plateau(t, 1.0, 2.0) * std::sinh(t);
        });
    }
}

OscillatoryResult KTilde::operator()(double s) const {
    if (std::abs(s) > s_max_ * (1.0 + 1e-12))
        throw DomainError("k_tilde: |s| = " + std::to_string(std::abs(s)) + " beyond the prepared s_max");
    OscillatoryResult res;
    res.params = {{"s", s}};
    auto sum = [&](const std::vector<double>& t, const std::vector<double>& w, double* mag) {
        const auto phi = spherical_h2_profile(s, t);
        std::vector<double> terms(t.size());
        double m = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            terms[i] = w[i] * phi[i];
            m += std::abs(terms[i]);
        }
        if (mag) *mag = m;
        return pairwise_sum(terms.data(), terms.size());
    };
    res.value = sum(t20_, w20_, &res.magnitude);
    res.panels = panels_;
    res.evaluations = t20_.size();
    if (estimate_) {
        finish(res, sum(t15_, w15_, nullptr));
        res.evaluations += t15_.size();
    }
    return res;
}

OscillatoryResult k_tilde(double s, const PwKernel& kernel) {
    KTilde kt(kernel, std::abs(s));
    auto res = kt(s);
    res.params["lambda"] = kernel.lambda;
    return res;
}

KTildeRegimes verify_ktilde_regimes(double lambda, const std::vector<double>& betas, double eps, double ds) {
    if (!(lambda >= 1.0)) throw DomainError("verify_ktilde_regimes: lambda must be >= 1");
    if (!(ds > 0.0)) throw DomainError("verify_ktilde_regimes: ds must be positive");
    for (double b : betas)
        if (!(b >= 1.0 && b <= lambda)) throw DomainError("verify_ktilde_regimes: beta must lie in [1, lambda]");
    KTildeRegimes rep;
    rep.lambda = lambda;
    rep.ds = ds;
    rep.betas = betas;
    const auto kernel = build_pw_kernel(lambda, eps);
    const double s_max = 2.0 * lambda + 50.0;
    OscillatoryOptions opt;
    opt.estimate_error = false;
    const KTilde kt(kernel, s_max, opt);
    const auto n = std::size_t(std::floor(s_max / ds)) + 1;
    rep.s.resize(n);
    rep.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) rep.s[j] = ds * double(j);
    parallel_for(n, [&](std::size_t j) { rep.values[j] = kt(rep.s[j]).value.real(); });
    const double tol = 1e-9 * ds;
    for (std::size_t j = 0; j < n; ++j) {
        const double a = std::abs(rep.values[j]);
        if (rep.s[j] <= 0.5 * lambda + tol) rep.sup_near = std::max(rep.sup_near, a);
        if (a > rep.sup_global) {
            rep.sup_global = a;
            rep.s_at_global = rep.s[j];
        }
    }
    std::vector<double> bounds{0.5 * lambda};
    for (double b : betas) {
        double best = 0.0, where = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = rep.s[j];
            if (s < 0.5 * lambda - tol || std::abs(s - lambda) < 0.25 * b - tol) continue;
            const double a = std::abs(rep.values[j]);
            if (a > best) {
                best = a;
                where = s;
            }
        }
        rep.sup_far.push_back(best);
        rep.s_at_far.push_back(where);
        bounds.push_back(lambda - 0.25 * b);
        bounds.push_back(lambda + 0.25 * b);
    }
    for (double b : bounds) {
        const auto j = std::size_t(std::llround(b / ds));
        if (j == 0 || j + 1 >= n) continue;
        rep.boundary_jump =
            std::max(rep.boundary_jump, std::abs(rep.values[j + 1] - rep.values[j - 1]) / rep.sup_global);
    }
    if (betas.size() >= 2) rep.beta_fit = fit_loglog(betas, rep.sup_far);
    return rep;
}

namespace {

double dA_dt(const GroupElement& left, cplx z, double t) {
    const double h = 1e-3;
    auto f = [&](double tt) { return iwasawa_A(left * n_elem(z) * a_elem(tt)); };
    return (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h);
}

/** @brief (1 - dA/dt)/u^2 along a one-parameter family, extrapolated quadratically for |u| < u0. */
double xi_along(double u, const std::function<GroupElement(double)>& family, cplx z, double t) {
    const double u0 = 1e-2;
    auto raw = [&](double v) { return (1.0 - dA_dt(family(v), z, t)) / (v * v); };
    if (std::abs(u) >= u0) return raw(u);
    const double sg = u >= 0.0 ? 1.0 : -1.0;
    const double f1 = raw(sg * u0), f2 = raw(2.0 * sg * u0), f3 = raw(3.0 * sg * u0);
    // Lagrange through q = 1, 2, 3 at q = |u| / u0.
    const double q = std::abs(u) / u0;
    return f1 * (q - 2.0) * (q - 3.0) / 2.0 - f2 * (q - 1.0) * (q - 3.0) + f3 * (q - 1.0) * (q - 2.0) / 2.0;
}

}  // namespace

double uniformization_xi(double r, double alpha, cplx z, double t) {
    if (!(std::abs(r) < kChartRadius)) throw DomainError("uniformization_xi: |r| must stay inside the chart");
    if (!std::isfinite(std::abs(z)) || !std::isfinite(t) || !std::isfinite(alpha))
        throw DomainError("uniformization_xi: non-finite input");
    const double c = std::cos(alpha), s = std::sin(alpha);
    return xi_along(r, [&](double v) { return exp_k(v * c, v * s); }, z, t);
}

double uniformization_xi_boundary(double theta, double x, double t) {
    if (!(std::abs(theta) < 2.0 * kChartRadius))
        throw DomainError("uniformization_xi_boundary: |theta| must be below pi");
    if (!std::isfinite(x) || !std::isfinite(t)) throw DomainError("uniformization_xi_boundary: non-finite input");
    return xi_along(theta, [](double v) { return b_elem(v); }, cplx(x, 0.0), t);
}

XiScan uniformization_scan(double delta, double C) {
    if (!(delta > 0.0 && delta < kChartRadius)) throw DomainError("uniformization_scan: delta outside the chart");
    if (!(C > 0.0)) throw DomainError("uniformization_scan: C must be positive");
    std::vector<double> rs{-delta, -0.5 * delta, 0.0, 0.5 * delta, delta};
    for (auto& r : rs) r *= 0.999;
    std::vector<cplx> zs;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) zs.push_back(std::polar(0.999 * C * double(i) / 4.0, 2.0 * kPi * j / 5.0 + 0.1));
    struct Cell {
        double r, alpha;
        cplx z;
    };
    std::vector<Cell> cells;
    for (double r : rs)
        for (int a = 0; a < 4; ++a)
            for (const auto& z : zs) cells.push_back({r, 2.0 * kPi * a / 4.0 + 0.3, z});
    const int nt = 20;
    std::vector<XiScan> part(cells.size());
    parallel_for(cells.size(), [&](std::size_t q) {
        const auto& c = cells[q];
        XiScan& out = part[q];
        out.sigma = 1e300;
        const double h = 1e-2;
        for (int k = 0; k < nt; ++k) {
            const double t = 0.999 * C * (-1.0 + 2.0 * k / double(nt - 1));
            const double x0 = uniformization_xi(c.r, c.alpha, c.z, t);
            const double xp = uniformization_xi(c.r, c.alpha, c.z, t + h);
            const double xm = uniformization_xi(c.r, c.alpha, c.z, t - h);
            out.sigma = std::min(out.sigma, std::abs(x0));
            out.max_dt1 = std::max(out.max_dt1, std::abs(xp - xm) / (2.0 * h));
            out.max_dt2 = std::max(out.max_dt2, std::abs(xp - 2.0 * x0 + xm) / (h * h));
            ++out.points;
        }
    });
    XiScan rep;
    rep.sigma = 1e300;
    for (const auto& p : part) {
        rep.points += p.points;
        rep.sigma = std::min(rep.sigma, p.sigma);
        rep.max_dt1 = std::max(rep.max_dt1, p.max_dt1);
        rep.max_dt2 = std::max(rep.max_dt2, p.max_dt2);
    }
    return rep;
}

double pair_cutoff(double t) { return smooth_plateau(t, 0.2, 1.0); }

double spherical_h3_at(double s, const GroupElement& h) {
    const double u = 0.5 * (std::norm(h.a) + std::norm(h.b) + std::norm(h.c) + std::norm(h.d)) - 1.0;
    return spherical_h3_closed(s, acosh1p(u));
}

OscillatoryResult eval_pair_integral(double s, double s1, double s2, const GroupElement& g,
                                     const std::function<double(double)>& rho1,
                                     const std::function<double(double)>& rho2, const OscillatoryOptions& opt) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("eval_pair_integral: s must be positive");
    if (!std::isfinite(s1) || !std::isfinite(s2)) throw DomainError("eval_pair_integral: non-finite s1 or s2");
    if (!g.finite()) throw DomainError("eval_pair_integral: non-finite group element");
    OscillatoryResult res;
    res.params = {{"s", s}, {"s1", s1}, {"s2", s2}};
    const double ga = std::norm(g.a), gb = std::norm(g.b), gc = std::norm(g.c), gd = std::norm(g.d);
    auto side = [&](double freq, double sj, double sign, const std::function<double(double)>& rho,
                    const GaussRule& rule, std::vector<double>& e, std::vector<cplx>& w) {
        const auto n = panel_nodes(-1.0, 1.0, panel_width(freq, opt), rule);
        e.clear();
        w.clear();
        for (std::size_t i = 0; i < n.t.size(); ++i) {
            const double t = n.t[i];
            const double chi = pair_cutoff(t);
            if (chi == 0.0) continue;
            const double ph = t + (rho ? rho(t) : 0.0);
            e.push_back(std::exp(t));
            w.push_back(n.w[i] * chi * std::polar(1.0, sign * sj * ph));
        }
        return n.panels;
    };
    auto run = [&](const GaussRule& rule, double* mag, std::size_t* panels, std::size_t* evals) {
        std::vector<double> e1, e2;
        std::vector<cplx> w1, w2;
        const std::size_t p1 = side(std::abs(s1) + s + 10.0, s1, -1.0, rho1, rule, e1, w1);
        const std::size_t p2 = side(std::abs(s2) + s + 10.0, s2, 1.0, rho2, rule, e2, w2);
        const double count = double(e1.size()) * double(e2.size());
        if (count > opt.max_evaluations)
            throw ResourceError("eval_pair_integral: " + std::to_string(count) + " evaluations exceed the budget", 0.0);
        std::vector<cplx> rows(e1.size());
        std::vector<double> rmag(e1.size());
        parallel_for(e1.size(), [&](std::size_t i) {
            cplx acc = 0.0;
            double m = 0.0;
            for (std::size_t j = 0; j < e2.size(); ++j) {
                const double q = e1[i] / e2[j];
                const double p = e1[i] * e2[j];
                // cosh d for a(-t1) g a(t2) o
                const double ch = 0.5 * (ga / q + gb / p + gc * p + gd * q);
                const cplx term = w2[j] * spherical_h3_closed(s, acosh1p(ch - 1.0));
                acc += term;
                m += std::abs(term);
            }
            rows[i] = w1[i] * acc;
            rmag[i] = std::abs(w1[i]) * m;
        });
        cplx total = 0.0;
        for (const auto& v : rows) total += v;
        if (mag) *mag = pairwise_sum(rmag.data(), rmag.size());
        if (panels) *panels = p1 * p2;
        if (evals) *evals += std::size_t(count);
        return total;
    };
    res.value = run(gauss20(), &res.magnitude, &res.panels, &res.evaluations);
    if (opt.estimate_error) finish(res, run(gauss15(), nullptr, nullptr, &res.evaluations));
    return res;
}

KnRadialSplit::KnRadialSplit(const PwKernel& kernel, double beta, double eps0, double s_max,
                             const OscillatoryOptions& opt)
    : lambda_(kernel.lambda), eps_(kernel.eps) {
    if (!(beta >= 1.0)) throw DomainError("kn_radial_split: beta must be >= 1");
    if (!(eps0 > 0.0 && eps0 < 0.5)) throw DomainError("kn_radial_split: eps0 must lie in (0, 1/2)");
    if (!(2.0 * kernel.eps <= 1.0)) throw DomainError("kn_radial_split: kernel support must lie in [-1, 1]");
    plateau_ = std::pow(beta, -0.5 + eps0);
    const auto n = panel_nodes(0.0, 2.0, panel_width(lambda_ + 50.0 + std::abs(s_max), opt), gauss20());
    t_ = n.t;
    w1_.resize(t_.size());
    w2_.resize(t_.size());
    parallel_for(t_.size(), [&](std::size_t i) {
        const double t = t_[i];
        const double base = n.w[i] * kernel(t) * std::sinh(t);
        const double p1 = b1(t);
        w1_[i] = base * p1;
        w2_[i] = base * (b0(t) - p1);
    });
}

double KnRadialSplit::b0(double t) const { return smooth_plateau(t, 1.0, 2.0); }

double KnRadialSplit::b1(double t) const { return smooth_plateau(t, plateau_, 2.0 * plateau_); }

double KnRadialSplit::transform(const std::vector<double>& weights, double s) const {
    // phi_{-s}(a(t)) sinh^2 t = sin(s t) sinh(t) / s, with limit t sinh t at s = 0.
    std::vector<double> terms(t_.size());
    const double as = std::abs(s);
    for (std::size_t i = 0; i < t_.size(); ++i)
        terms[i] = weights[i] * (as > 1e-12 ? std::sin(as * t_[i]) / as : t_[i]);
    return pairwise_sum(terms.data(), terms.size());
}

double KnRadialSplit::khat1(double s) const { return transform(w1_, s); }

double KnRadialSplit::khat2(double s) const { return transform(w2_, s); }

double KnRadialSplit::hlambda(double s) const { return pw_spectral(s, lambda_, eps_); }

KnSplitReport kn_radial_split(double lambda, const std::vector<double>& betas, double eps0, double ds) {
    if (!(lambda >= 1.0)) throw DomainError("kn_radial_split: lambda must be >= 1");
    if (!(ds > 0.0)) throw DomainError("kn_radial_split: ds must be positive");
    KnSplitReport rep;
    rep.lambda = lambda;
    rep.eps0 = eps0;
    rep.betas = betas;
    const auto kernel = build_pw_kernel(lambda, 0.5);
    const double s_max = 2.0 * lambda;
    const auto n = std::size_t(std::floor(s_max / ds)) + 1;
    double hmax = 0.0;
    for (std::size_t j = 0; j < n; ++j) hmax = std::max(hmax, pw_spectral(ds * double(j), lambda, kernel.eps));
    for (double beta : betas) {
        const KnRadialSplit split(kernel, beta, eps0, s_max);
        std::vector<double> k1(n), k2(n);
        parallel_for(n, [&](std::size_t j) {
            k1[j] = split.khat1(ds * double(j));
            k2[j] = split.khat2(ds * double(j));
        });
        double far = 0.0, near = 0.0, off = 0.0, lin = 0.0;
        const double tol = 1e-9 * ds;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = ds * double(j);
            const double a = std::abs(k1[j]);
            if (s >= 0.5 * lambda - tol) {
                far = std::max(far, a);
                if (std::abs(s - lambda) >= beta - tol) off = std::max(off, a);
            } else {
                near = std::max(near, a);
            }
            lin = std::max(lin, std::abs(k1[j] + k2[j] - split.hlambda(s)) / hmax);
        }
        rep.sup_far.push_back(far);
        rep.sup_near.push_back(near);
        rep.sup_off_band.push_back(off);
        rep.linearity.push_back(lin);
    }
    if (betas.size() >= 2) rep.beta_fit = fit_loglog(betas, rep.sup_far);
    return rep;
}

}  // namespace hyperlap
