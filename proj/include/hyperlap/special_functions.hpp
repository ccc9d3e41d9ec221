#pragma once

#include <vector>

#include "hyperlap/numerics.hpp"

namespace hyperlap {

enum class Space { H2, H3 };

/** @brief Point of the upper half-plane model of H2 (y > 0); the origin is (0, 1). */
struct H2Point {
    double x = 0.0;
    double y = 1.0;
};

/** @brief Value of a quadrature together with its error estimate and panel count. */
struct QuadratureValue {
    cplx value;
    double est_error = 0.0;
    int panels = 0;
};

/**
 * @brief Spherical function of H2 at a(t) by quadrature over SO(2).
 *
 * Requires |Im s| <= 1/2. Throws AccuracyError if the estimated error exceeds
 * 1e-8 times the (1+|st|)^{-1/2} envelope.
 */
QuadratureValue spherical_h2_quad(cplx s, double t);
cplx spherical_h2(cplx s, double t);

/** @brief Spherical function of H3 at a(t) by quadrature over M\K0 (one polar angle). */
QuadratureValue spherical_h3_quad(cplx s, double t);
cplx spherical_h3(cplx s, double t);

/** @brief Closed form sin(st)/(s sinh t) with its removable limits; validated against the quadrature. */
double spherical_h3_closed(double s, double t);

/**
 * @brief H2 spherical function on a sorted list of t >= 0 for real s.
 *
 * Power series near t = 0, then a fourth-order Magnus integrator for
 * u = sqrt(sinh t) phi, which solves u'' + (s^2 + 1/(4 sinh^2 t)) u = 0.
 */
std::vector<double> spherical_h2_profile(double s, const std::vector<double>& ts);

/** @brief Product over j < |n| of (-is + 1/2 + j)/(is + 1/2 + j). Throws DomainError at a pole. */
cplx gamma_n(int n, cplx s);

/** @brief Integral over B of e^{(is+1/2)A(b^{-1}x)} e^{i n theta} with probability measure on theta. */
QuadratureValue generalized_spherical_quad(cplx s, int n, const H2Point& x);
cplx generalized_spherical(cplx s, int n, const H2Point& x);

/** @brief Polar coordinates: x = so2(phi) a(t) o with t >= 0. */
void h2_polar(const H2Point& x, double* phi, double* t);

/** @brief Iwasawa height A(b_theta^{-1} x) for x in H2. */
double height_h2(double theta, const H2Point& x);

/** @brief Envelope of |phi_s(a(t))| against x = s t at fixed t, binned dyadically on [x_lo, x_hi]. */
struct EnvelopeReport {
    double t = 0.0;
    DecayFit fit;
    double constant = 0.0;  // max |phi| (1 + x)^{expected}
};
EnvelopeReport spherical_envelope(Space space, double t, double x_lo, double x_hi, double dx);

}  // namespace hyperlap
