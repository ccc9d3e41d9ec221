#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hyperlap/group_core.hpp"
#include "hyperlap/numerics.hpp"
#include "hyperlap/special_functions.hpp"

namespace hyperlap {

/**
 * @brief Even radial profile f(a(t)) sampled at t_j = j * step, j = 0..N, with t_N = t_max.
 *
 * Only t >= 0 is stored; negative t is read through evenness.
 */
struct RadialFunction {
    Space space = Space::H3;
    double step = 2e-3;
    double t_max = 6.0;
    std::vector<double> samples;

    static RadialFunction sample(Space space, double t_max, double step, const std::function<double(double)>& f);
    std::size_t size() const { return samples.size(); }
    double t(std::size_t j) const { return step * double(j); }
    /** @brief Cubic Lagrange interpolation; zero beyond t_max. */
    double operator()(double t) const;
};

/**
 * @brief Samples phi(s, b_theta) on s_j = s0 + j ds (j < ns) times theta_k = 2 pi k / nb (k < nb).
 *
 * nb == 1 means a radial spectrum. Values outside [band_lo, band_hi] are expected to be negligible.
 */
struct SpectralFunction {
    Space space = Space::H2;
    double s0 = 0.0;
    double ds = 0.05;
    std::size_t ns = 0;
    std::size_t nb = 1;
    double band_lo = 0.0;
    double band_hi = 0.0;
    std::vector<cplx> values;

    static SpectralFunction zeros(Space space, double s0, double ds, std::size_t ns, std::size_t nb);
    double s(std::size_t j) const { return s0 + ds * double(j); }
    double theta(std::size_t k) const { return 2.0 * kPi * double(k) / double(nb); }
    cplx& at(std::size_t j, std::size_t k) { return values[j * nb + k]; }
    const cplx& at(std::size_t j, std::size_t k) const { return values[j * nb + k]; }
};

/** @brief Constant multiplying s tanh(pi s) ds (H2) or s^2 ds (H3) in the polar inversion formula. */
struct PlancherelCalibration {
    Space space = Space::H2;
    double constant = 0.0;
    double residual = 0.0;
    double t_max = 6.0;
    double step = 2e-3;
    double s_max = 300.0;
    double ds = 0.05;
};

/** @brief Plancherel density without the constant: s tanh(pi s) on H2, s^2 on H3. */
double plancherel_weight(Space space, double s);

/** @brief Polar transform F(s) = int_0^T f(t) phi_{-s}(t) sinh(t)^{d-1} dt (no sphere-area factor). */
cplx hc_transform(const RadialFunction& f, double s);
std::vector<double> hc_transform(const RadialFunction& f, const std::vector<double>& s);

/**
 * @brief Radial inversion c * int_0^inf F(s) phi_s(t) w(s) ds by the trapezoid rule in s.
 *
 * spec must have nb == 1 and s0 == 0 (half weight at s = 0, the integrand being even).
 */
RadialFunction hc_inverse(const SpectralFunction& spec, const PlancherelCalibration& cal, double t_max, double step);

/** @brief Least-squares fit of the inversion constant on five Gaussian bumps. */
PlancherelCalibration calibrate_plancherel(Space space, double t_max = 6.0, double step = 2e-3, double s_max = 300.0,
                                           double ds = 0.05);

/**
 * @brief Calibration at the default grid, computed once per process.
 *
 * If HYPERLAP_CACHE names a file, a matching cached value is reused and new values are written back.
 */
const PlancherelCalibration& plancherel(Space space);

/** @brief Uniform Iwasawa grid on H2: x_i = x0 + i dx, t_j = t0 + j dt, point x_i + i e^{t_j}. */
struct H2Grid {
    double x0 = -1.0, dx = 0.02;
    std::size_t nx = 101;
    double t0 = -1.0, dt = 0.02;
    std::size_t nt = 101;

    std::size_t size() const { return nx * nt; }
    H2Point point(std::size_t idx) const;
    /** @brief Trapezoid weight times the measure factor e^{-t}. */
    double weight(std::size_t idx) const;
};

struct H2Function {
    H2Grid grid;
    std::vector<cplx> values;  // index i * nt + j

    static H2Function sample(const H2Grid& grid, const std::function<cplx(const H2Point&)>& f);
};

/** @brief Hyperbolic L2 inner product int f1 conj(f2) dx on the common grid. */
cplx h2_inner(const H2Function& f1, const H2Function& f2);

/** @brief A(b_theta^{-1} x) in closed form: log y - log|sin(theta/2) z + cos(theta/2)|^2. */
double boundary_height(const H2Point& x, double theta);

/** @brief Helgason transform int f(x) e^{(-is+1/2) A(x,b_theta)} dx. */
cplx helgason_h2(const H2Function& f, double s, double theta);

/** @brief Helgason transform on the whole (s, theta) grid; parallel over theta. */
SpectralFunction helgason_h2(const H2Function& f, double s0, double ds, std::size_t ns, std::size_t nb);

/**
 * @brief Inverse Helgason transform at the given points.
 *
 * Positive-frequency synthesis int_{s>0} int_B phi e^{(is+1/2)A} (c/2pi) s tanh(pi s) ds db with
 * trapezoid weights in s and equal weights on the nb boundary nodes. Boundary columns that vanish
 * identically are skipped.
 */
std::vector<cplx> helgason_inverse_h2(const SpectralFunction& spec, const std::vector<H2Point>& pts,
                                      const PlancherelCalibration& cal);
H2Function helgason_inverse_h2(const SpectralFunction& spec, const H2Grid& grid, const PlancherelCalibration& cal);

/** @brief Row weights of the H2 synthesis: trapezoid in s times (c/2pi) s tanh(pi s) times 1/nb. */
std::vector<double> helgason_synthesis_weights(const SpectralFunction& spec, const PlancherelCalibration& cal);

/** @brief int int phi1 conj(phi2) (c/2pi) s tanh(pi s) ds db on a common grid. */
cplx spectral_inner(const SpectralFunction& a, const SpectralFunction& b, const PlancherelCalibration& cal);

/** @brief Uniform grid on H3 in coordinates (x1 + i x2, e^t); measure e^{-2t}. */
struct H3Grid {
    double x0 = -1.0, dx = 0.05;
    std::size_t nx = 41;
    double t0 = -1.0, dt = 0.05;
    std::size_t nt = 41;

    std::size_t size() const { return nx * nx * nt; }
    H3Point point(std::size_t idx) const;
    double weight(std::size_t idx) const;
};

struct H3Function {
    H3Grid grid;
    std::vector<cplx> values;

    static H3Function sample(const H3Grid& grid, const std::function<cplx(const H3Point&)>& f);
};

/** @brief Height A(k^{-1} x) of a point of H3 after the inverse rotation. */
double boundary_height_h3(const H3Point& x, const GroupElement& k);

/** @brief Helgason transform on H3: int f(x) e^{(1-is) A(k^{-1}x)} dx, with k representing kM. */
cplx helgason_h3(const H3Function& f, double s, const GroupElement& k);

/** @brief Building block h(x) = (sin(eps x/4)/(eps x/4))^4. */
double pw_profile(double x, double eps);

/** @brief Spectral weight (h(s - lambda) + h(-s - lambda))^2. */
double pw_spectral(double s, double lambda, double eps);

/**
 * @brief Nonnegative spectral kernel concentrated at +-lambda and its inverse transform on H3.
 *
 * The kernel vanishes for |t| > 2 eps since its spectrum is a square of a function of exponential type eps.
 */
struct PwKernel {
    double lambda = 0.0;
    double eps = 0.5;
    double constant = 0.0;  // calibrated H3 inversion constant
    SpectralFunction spectrum;
    RadialFunction kernel;
    std::vector<double> spectrum_nodes;    // Gauss nodes in s covering the essential support
    std::vector<double> spectrum_weights;  // quadrature weight times h_lambda at each node

    /** @brief k(a(t)) by direct quadrature of the inversion integral. */
    double operator()(double t) const;
    /** @brief Largest sampled t with |k| > tol * |k(0)|. */
    double support_radius(double tol) const;
};

PwKernel build_pw_kernel(double lambda, double eps, double t_max = 3.0, double step = 2e-3);

/**
 * @brief Extends phi supported in [c, inf) x B to R x B so that the Weyl functional equation holds.
 *
 * Mode by mode in e^{i n theta}: Phi_n(-s) = phi_n(s) / Gamma_n(s) for s >= c, and zero on (-c, c).
 * Throws DomainError when band_lo <= 0 or the input carries mass below band_lo.
 */
SpectralFunction weyl_extend(const SpectralFunction& phi);

/** @brief Trigonometric interpolation of the boundary samples at row j to an arbitrary angle. */
cplx boundary_interpolate(const SpectralFunction& phi, std::size_t j, double theta);

/** @brief Sharp split by the indicator of lo <= |s| <= hi: (inside, outside). */
std::pair<SpectralFunction, SpectralFunction> project_band(const SpectralFunction& phi, double lo, double hi);

/** @brief Even cosine taper: 1 for ||s| - lambda| <= beta/4, 0 for ||s| - lambda| >= beta/2. */
double taper_tau1(double s, double lambda, double beta);

/** @brief Flat binary file: 8-byte little-endian header length, JSON header, then float64 payload. */
void save_binary(const std::string& path, const RadialFunction& f);
void save_binary(const std::string& path, const SpectralFunction& f);
RadialFunction load_radial(const std::string& path);
SpectralFunction load_spectral(const std::string& path);

}  // namespace hyperlap
