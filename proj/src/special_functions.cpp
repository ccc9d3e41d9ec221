#include "hyperlap/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperlap/errors.hpp"
#include "hyperlap/group_core.hpp"

namespace hyperlap {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Height A(k a(t)) in the variable v with tan(angle) = e^v; runs from t (v -> -inf) to -t (v -> +inf).
double height_v(double v, double t) { return softplus(2.0 * v) - softplus(2.0 * v + 2.0 * t) + t; }

double height_v_slope(double v, double t) { return 2.0 * logistic(2.0 * v) - 2.0 * logistic(2.0 * v + 2.0 * t); }

// Panels whose phase change |s| * |dA| stays below 3 rad; unit panels where the integrand is smooth.
std::vector<double> phase_panels(double freq, double t, int n) {
    const double tail = 40.0;
    const double lo = -t - tail, hi = tail;
    std::vector<double> edges{lo};
    double v = lo;
    while (v < hi) {
        const double slope = std::max(std::abs(height_v_slope(v, t)), std::abs(height_v_slope(v + 1.0, t)));
        const double angular = std::abs(double(n)) / std::cosh(std::min(std::abs(v), std::abs(v + 1.0)));
        const double w = std::min(1.0, 3.0 / (freq * slope + angular + 1e-300));
        v = std::min(hi, v + w);
        edges.push_back(v);
    }
    while (edges.size() < 33) {
        std::vector<double> finer{edges.front()};
        for (std::size_t i = 1; i < edges.size(); ++i) {
            finer.push_back(0.5 * (edges[i - 1] + edges[i]));
            finer.push_back(edges[i]);
        }
        edges.swap(finer);
    }
    return edges;
}

void check_strip(cplx s, const char* who) {
    if (std::abs(s.imag()) > 0.5 + 1e-12)
        throw DomainError(std::string(who) + ": |Im s| must not exceed 1/2");
}

QuadratureValue finish(cplx value, double err, std::size_t edges, double envelope, const char* who) {
    QuadratureValue q{value, err, int(edges) - 1};
    if (err > std::max(1e-8 * envelope, 1e-14)) throw AccuracyError(std::string(who) + ": quadrature did not converge", err);
    return q;
}

}  // namespace

QuadratureValue spherical_h2_quad(cplx s, double t) {
    check_strip(s, "spherical_h2");
    t = std::abs(t);
    if (t == 0.0) return {1.0, 0.0, 0};
    const cplx p = cplx(0.0, 1.0) * s + 0.5;
    auto f = [&](double v) { return std::exp(p * height_v(v, t)) / (kPi * std::cosh(v)); };
    const auto edges = phase_panels(std::abs(s.real()), t, 0);
    double err = 0.0;
    const cplx val = integrate_panels(f, edges, &err);
    return finish(val, err, edges.size(), 1.0 / std::sqrt(1.0 + std::abs(s) * t), "spherical_h2");
}

cplx spherical_h2(cplx s, double t) { return spherical_h2_quad(s, t).value; }

QuadratureValue spherical_h3_quad(cplx s, double t) {
    check_strip(s, "spherical_h3");
    t = std::abs(t);
    if (t == 0.0) return {1.0, 0.0, 0};
    const cplx p = cplx(0.0, 1.0) * s + 1.0;
    auto f = [&](double v) {
        const double c = std::cosh(v);
        return std::exp(p * height_v(v, t)) / (2.0 * c * c);
    };
    const auto edges = phase_panels(std::abs(s.real()), t, 0);
    double err = 0.0;
    const cplx val = integrate_panels(f, edges, &err);
    return finish(val, err, edges.size(), 1.0 / (1.0 + std::abs(s) * t), "spherical_h3");
}

cplx spherical_h3(cplx s, double t) { return spherical_h3_quad(s, t).value; }

double spherical_h3_closed(double s, double t) {
    t = std::abs(t);
    if (t == 0.0) return 1.0;
    const double ratio = t / std::sinh(t);
    const double x = s * t;
    if (std::abs(x) < 1e-6) return ratio * (1.0 - x * x / 6.0);
    return ratio * std::sin(x) / x;
}

namespace {

// Hypergeometric series 2F1(1/2+is, 1/2-is; 1; -sinh^2(t/2)) and its t-derivative.
void h2_series(double s, double t, double* phi, double* dphi) {
    const double z = -std::pow(std::sinh(0.5 * t), 2);
    const double dz = -0.5 * std::sinh(t);
    double term = 1.0, sum = 1.0, dsum = 0.0;
    for (int k = 0; k < 400; ++k) {
        term *= ((k + 0.5) * (k + 0.5) + s * s) / double((k + 1) * (k + 1)) * z;
        sum += term;
        if (z != 0.0) dsum += term * double(k + 1) / z;
        if (std::abs(term) < 1e-18 * std::abs(sum) && k > 2) break;
    }
    *phi = sum;
    *dphi = dsum * dz;
}

}  // namespace

std::vector<double> spherical_h2_profile(double s, const std::vector<double>& ts) {
    std::vector<double> out(ts.size());
    s = std::abs(s);
    const double t_series = std::min(0.5, 4.0 / std::max(s, 1e-12));
    const double r3 = std::sqrt(3.0);
    const double c1 = 0.5 - r3 / 6.0, c2 = 0.5 + r3 / 6.0;
    auto q = [&](double t) {
        const double sh = std::sinh(t);
        return s * s + 0.25 / (sh * sh);
    };
    bool marching = false;
    double cur = 0.0, u = 0.0, du = 0.0;
    double prev_t = -1.0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
        const double t = std::abs(ts[j]);
        if (t < prev_t) throw DomainError("spherical_h2_profile: |t| values must be nondecreasing");
        prev_t = t;
        if (t <= t_series) {
            double phi, dphi;
            h2_series(s, t, &phi, &dphi);
            out[j] = phi;
            continue;
        }
        if (!marching) {
            double phi, dphi;
            h2_series(s, t_series, &phi, &dphi);
            const double sh = std::sinh(t_series);
            const double rt = std::sqrt(sh);
            cur = t_series;
            u = rt * phi;
            du = rt * (dphi + 0.5 * std::cosh(t_series) / sh * phi);
            marching = true;
        }
        while (cur < t) {
            const double h = std::min({t - cur, 0.03 * cur, 0.01});
            const double q1 = q(cur + c1 * h), q2 = q(cur + c2 * h);
            const double qbar = 0.5 * (q1 + q2);
            const double delta = (r3 / 12.0) * h * h * (q2 - q1);
            const double mu2 = delta * delta - h * h * qbar;
            double C, S;
            if (mu2 < 0.0) {
                const double nu = std::sqrt(-mu2);
                C = std::cos(nu);
                S = std::sin(nu) / nu;
            } else if (mu2 > 1e-24) {
                const double mu = std::sqrt(mu2);
                C = std::cosh(mu);
                S = std::sinh(mu) / mu;
            } else {
                C = 1.0;
                S = 1.0;
            }
            const double nu_ = C * u + S * (delta * u + h * du);
            const double ndu = C * du + S * (-h * qbar * u - delta * du);
            u = nu_;
            du = ndu;
            cur = (t - cur <= h) ? t : cur + h;
        }
        out[j] = u / std::sqrt(std::sinh(t));
    }
    return out;
}

cplx gamma_n(int n, cplx s) {
    const cplx is = cplx(0.0, 1.0) * s;
    cplx prod = 1.0;
    const int m = std::abs(n);
    for (int j = 0; j < m; ++j) {
        const cplx den = is + 0.5 + double(j);
        if (std::abs(den) < 1e-14) throw DomainError("gamma_n: pole at factor j = " + std::to_string(j));
        prod *= (-is + 0.5 + double(j)) / den;
    }
    return prod;
}

void h2_polar(const H2Point& x, double* phi, double* t) {
    if (!(x.y > 0.0)) throw DomainError("h2_polar: y must be positive");
    // P = g g^T for g = n(x) a(log y); eigenvalues e^{+-t}, top eigenvector (cos phi, -sin phi).
    const double p00 = x.y + x.x * x.x / x.y, p01 = x.x / x.y, p11 = 1.0 / x.y;
    const double half_tr = 0.5 * (p00 + p11);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (p00 - p11) * (p00 - p11) + p01 * p01));
    const double lam = half_tr + disc;
    *t = std::log(lam);
    if (disc < 1e-15) {
        *phi = 0.0;
        return;
    }
    double vx, vy;
    if (p00 >= p11) {
        vx = lam - p11;
        vy = p01;
    } else {
        vx = p01;
        vy = lam - p00;
    }
    *phi = std::atan2(-vy, vx);
}

double height_h2(double theta, const H2Point& x) {
    return iwasawa_A(b_elem(-theta) * n_elem(x.x) * a_elem(std::log(x.y)));
}

QuadratureValue generalized_spherical_quad(cplx s, int n, const H2Point& x) {
    check_strip(s, "generalized_spherical");
    double phi = 0.0, t = 0.0;
    h2_polar(x, &phi, &t);
    const cplx p = cplx(0.0, 1.0) * s + 0.5;
    auto f = [&](double v) {
        const double psi = std::atan(std::exp(v));
        return std::exp(p * height_v(v, t)) * std::cos(2.0 * double(n) * psi) / (kPi * std::cosh(v));
    };
    const auto edges = phase_panels(std::abs(s.real()), t, n);
    double err = 0.0;
    const cplx val = std::polar(1.0, 2.0 * double(n) * phi) * integrate_panels(f, edges, &err);
    return finish(val, err, edges.size(), 1.0 / std::sqrt(1.0 + std::abs(s) * t), "generalized_spherical");
}

cplx generalized_spherical(cplx s, int n, const H2Point& x) { return generalized_spherical_quad(s, n, x).value; }

EnvelopeReport spherical_envelope(Space space, double t, double x_lo, double x_hi, double dx) {
    if (!(t > 0.0) || !(x_lo > 0.0) || !(x_hi > x_lo) || !(dx > 0.0)) throw DomainError("spherical_envelope: bad range");
    const double expected = space == Space::H2 ? 0.5 : 1.0;
    const std::size_t count = std::size_t((x_hi - x_lo) / dx) + 1;
    std::vector<double> xs(count), vals(count);
    parallel_for(count, [&](std::size_t i) {
        const double x = x_lo + dx * double(i);
        xs[i] = x;
        vals[i] = space == Space::H2 ? std::abs(spherical_h2(x / t, t)) : std::abs(spherical_h3_closed(x / t, t));
    });
    EnvelopeReport rep;
    rep.t = t;
    std::vector<double> bx, by;
    for (double left = x_lo; left < x_hi; left *= 2.0) {
        const double right = std::min(2.0 * left, x_hi);
        double sup = 0.0;
        for (std::size_t i = 0; i < count; ++i)
            if (xs[i] >= left && xs[i] <= right) sup = std::max(sup, vals[i]);
        if (sup > 0.0) {
            bx.push_back(left);
            by.push_back(sup);
        }
    }
    rep.fit = fit_loglog(bx, by);
    for (std::size_t i = 0; i < count; ++i) rep.constant = std::max(rep.constant, vals[i] * std::pow(1.0 + xs[i], expected));
    return rep;
}

}  // namespace hyperlap
