#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hyperlap/group_core.hpp"
#include "hyperlap/numerics.hpp"
#include "hyperlap/transforms.hpp"

namespace hyperlap {

/**
 * @brief Value of an oscillatory integral with its quadrature diagnostics.
 *
 * est_error is |GL20 - GL15| on the same panels; below_noise is set when it exceeds 5% of |value|.
 */
struct OscillatoryResult {
    cplx value{0.0};
    std::map<std::string, double> params;
    std::size_t panels = 0;
    std::size_t evaluations = 0;
    double est_error = 0.0;
    double magnitude = 0.0;  // quadrature sum of |integrand|, the roundoff scale
    bool below_noise = false;

    bool resolved() const { return !below_noise; }
};

/** @brief Quadrature controls shared by the oscillatory evaluators. */
struct OscillatoryOptions {
    /** @brief Oscillation periods per 20-point panel at the largest phase frequency. */
    double periods_per_panel = 2.0;
    /** @brief Cap on integrand evaluations; exceeding it throws ResourceError. */
    double max_evaluations = 2e9;
    bool estimate_error = true;
};

/** @brief Radial cutoff on H2 for the inner integral: 1 for d <= 1/2, 0 for d >= 1. */
double inner_cutoff(double d);

/**
 * @brief J(r; rho) = int_{H2} b(x) phi^{H3}_r(x) e^{(1/2 - i rho r) A(x)} dx in Iwasawa coordinates (x, t).
 *
 * The K0-average of e^{(ir+1) A(k n(x) a(t))} is the H3 spherical function at the distance of n(x) a(t) o
 * from o, so the four-dimensional integral reduces to a planar one. Requires r >= 20 and 0 <= rho <= 0.9.
 */
OscillatoryResult eval_J_rho(double r, double rho, const OscillatoryOptions& opt = {});

/**
 * @brief The same J(r; rho) by quadrature over (x, t) and two exponential charts of M\K0.
 *
 * Charts k = exp_k(s) and k = exp_k(s) w0 over |s| < pi/3, glued by a partition of unity in Theta(k).
 * Throws ResourceError with the partial sum when the evaluation budget would be exceeded.
 */
OscillatoryResult eval_J_rho_direct(double r, double rho, const OscillatoryOptions& opt = {});

/** @brief Phase A(exp(s1 X1 + s2 X2) k_rho n(x) a(t)) - rho t at v = (x, t, s1, s2). */
double critical_phase(double rho, const double v[4]);

/** @brief The Hessian matrix D_rho in closed form, order (x, t, s1, s2). */
std::array<std::array<double, 4>, 4> hessian_closed_form(double rho);

struct HessianReport {
    double rho = 0.0;
    std::array<std::array<double, 4>, 4> hessian{};
    double det = 0.0;
    double det_expected = 0.0;  // 16 (1 - rho^2)
    double max_entry_error = 0.0;
};

/** @brief Central-difference Hessian (step h) of the phase at the origin, compared to the closed form. */
HessianReport hessian_F(double rho, double h = 1e-4);

/** @brief Determinant of a 4x4 matrix by partial-pivot elimination. */
double det4(std::array<std::array<double, 4>, 4> m);

struct CriticalPointReport {
    double residual = 0.0;  // Euclidean norm of the central-difference gradient
    double psi = 0.0;       // Psi(k_rho)
    double theta = 0.0;     // Theta(k_rho)
};

/** @brief Gradient norm of the phase at the point v (default the origin), with Psi and Theta of k_rho. */
CriticalPointReport critical_point_residual(double rho, const std::array<double, 4>& v = {0.0, 0.0, 0.0, 0.0},
                                            double h = 1e-5);

/**
 * @brief k~(s) = 2 pi int_0^2 k(a(t)) b(t) phi^{H2}_{-s}(a(t)) sinh t dt for the restriction of an H3 kernel to H2.
 *
 * b = 1 on [0, 1] and 0 beyond 2. The t-panels resolve the frequency of k plus s_max; the kernel is
 * evaluated once per node.
 */
class KTilde {
public:
    KTilde(const PwKernel& kernel, double s_max, const OscillatoryOptions& opt = {});

    OscillatoryResult operator()(double s) const;
    double s_max() const { return s_max_; }
    std::size_t nodes() const { return t20_.size(); }

private:
    double s_max_;
    bool estimate_;
    std::vector<double> t20_, w20_, t15_, w15_;
    std::size_t panels_ = 0;
};

/** @brief One-off k~(s); builds the node set for s_max = |s|. */
OscillatoryResult k_tilde(double s, const PwKernel& kernel);

/** @brief Suprema of |k~| over the three frequency regimes for one lambda and several beta. */
struct KTildeRegimes {
    double lambda = 0.0;
    double ds = 0.0;
    std::vector<double> s;        // sweep grid on [0, s_max]
    std::vector<double> values;   // k~(s) (real: the kernel and the spherical function are real)
    double sup_near = 0.0;        // |s| <= lambda / 2
    double sup_global = 0.0;
    double s_at_global = 0.0;
    std::vector<double> betas;
    std::vector<double> sup_far;  // |s| >= lambda / 2 and ||s| - lambda| >= beta / 4
    std::vector<double> s_at_far;
    double boundary_jump = 0.0;   // max |k~| jump between neighbouring grid points around s = lambda / 2
    DecayFit beta_fit;            // sup_far against beta
};

/** @brief Sweeps k~ on s in [0, 2 lambda + 50] with step ds and extracts the regime suprema. */
KTildeRegimes verify_ktilde_regimes(double lambda, const std::vector<double>& betas, double eps = 0.5,
                                    double ds = 0.1);

/** @brief Chart radius for exp(r X): the exponential is a diffeomorphism on |r| < pi/2. */
constexpr double kChartRadius = 1.5707963267948966;

/**
 * @brief xi(r, X, z, t) with d/dt A(exp(rX) n(z) a(t)) = 1 - r^2 xi, X = cos(alpha) X1 + sin(alpha) X2.
 *
 * d/dt A by a five-point central difference; for |r| < 1e-2 the value is extrapolated quadratically
 * from r0, 2 r0 and 3 r0 (r0 = 1e-2) on the same ray. Throws DomainError for |r| >= pi/2.
 */
double uniformization_xi(double r, double alpha, cplx z, double t);

/** @brief Boundary version: d/dt A(b_theta n(x) a(t)) = 1 - theta^2 xi_B(theta, x, t), through the SO(2) chart. */
double uniformization_xi_boundary(double theta, double x, double t);

struct XiScan {
    std::size_t points = 0;
    double sigma = 0.0;  // min |xi|
    double max_dt1 = 0.0;
    double max_dt2 = 0.0;
};

/**
 * @brief Grid scan over r in [-delta, delta], alpha, z in the disk of radius C and t in [-C, C].
 *
 * 5 x 4 x 25 x 20 = 10^4 points; t-derivatives of xi by central differences with step 1e-2.
 */
XiScan uniformization_scan(double delta, double C);

/** @brief Cutoff in the pair integral: 1 on |t| <= 0.2, 0 for |t| >= 1. */
double pair_cutoff(double t);

/** @brief H3 spherical function at the distance from o to h o, stable near the origin. */
double spherical_h3_at(double s, const GroupElement& h);

/**
 * @brief J(s, s1, s2, g) = int int chi(t1) chi(t2) e^{-i s1 (t1 + rho1(t1)) + i s2 (t2 + rho2(t2))}
 * phi^{H3}_s(a(-t1) g a(t2)) dt1 dt2.
 *
 * Empty rho functions are read as zero. Requires s > 0 and finite g.
 */
OscillatoryResult eval_pair_integral(double s, double s1, double s2, const GroupElement& g,
                                     const std::function<double(double)>& rho1 = {},
                                     const std::function<double(double)>& rho2 = {},
                                     const OscillatoryOptions& opt = {});

/**
 * @brief Radial split of the H3 kernel k = b0 k into k1 = b1 k and k2 = (b0 - b1) k.
 *
 * b0 = 1 on [-1, 1] and 0 outside [-2, 2]; b1 = 1 on |t| <= L and 0 for |t| >= 2 L with
 * L = beta^{-1/2 + eps0}. Transforms are polar integrals int_0^2 b k phi_{-s} sinh^2 t dt, so that
 * the transform of k itself is h_lambda.
 */
class KnRadialSplit {
public:
    KnRadialSplit(const PwKernel& kernel, double beta, double eps0, double s_max,
                  const OscillatoryOptions& opt = {});

    double plateau() const { return plateau_; }
    double b0(double t) const;
    double b1(double t) const;
    double khat1(double s) const;
    double khat2(double s) const;
    /** @brief h_lambda(s) from the kernel's spectral profile. */
    double hlambda(double s) const;

private:
    double transform(const std::vector<double>& weights, double s) const;

    double lambda_, eps_, plateau_;
    std::vector<double> t_, w1_, w2_;
};

struct KnSplitReport {
    double lambda = 0.0;
    double eps0 = 0.0;
    std::vector<double> betas;
    std::vector<double> sup_far;       // sup_{|s| >= lambda/2} |k^_1|
    std::vector<double> sup_near;      // sup_{|s| <= lambda/2} |k^_1|
    std::vector<double> sup_off_band;  // sup over |s| >= lambda/2, ||s| - lambda| >= beta
    std::vector<double> linearity;     // max |k^_1 + k^_2 - h_lambda| / max h_lambda
    DecayFit beta_fit;
};

/** @brief Scans k^_1 on s in [0, 2 lambda] with step ds for each beta. */
KnSplitReport kn_radial_split(double lambda, const std::vector<double>& betas, double eps0, double ds = 0.1);

}  // namespace hyperlap
