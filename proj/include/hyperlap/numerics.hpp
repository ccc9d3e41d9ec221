#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace hyperlap {

using cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

/** @brief 20-point Gauss-Legendre rule on [-1, 1] (nodes ascending). */
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussRule& gauss20();
const GaussRule& gauss15();

/**
 * @brief Integrates f over consecutive panels [edges[i], edges[i+1]].
 *
 * Returns the 20-point value; err receives |GL20 - GL15| summed over panels.
 */
cplx integrate_panels(const std::function<cplx(double)>& f, const std::vector<double>& edges,
                      double* err = nullptr);

/** @brief Romberg-extrapolated trapezoid on a uniform grid (samples.size()-1 divisible by 8). */
double romberg_uniform(const std::vector<double>& samples, double h);

/** @brief Pairwise (cascade) summation for deterministic, low-roundoff totals. */
double pairwise_sum(const double* x, std::size_t n);

/** @brief Nelder-Mead minimization; returns the minimizing point and writes the minimum. */
std::vector<double> minimize(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, double step, double tol, int max_iter,
                             double* fmin);

/** @brief Brent (golden-section plus parabolic) search for a minimum of f on [lo, hi]. */
double line_minimize(const std::function<double(double)>& f, double lo, double hi,
                     double* fmin = nullptr);

/** @brief Least-squares line through (log x, log y). */
struct DecayFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<double> xs;
    std::vector<double> ys;
    bool accepted() const { return r2 >= 0.9; }
};
DecayFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

/** @brief Deterministic per-sample generator: seeds mt19937_64 from splitmix64(root, counter). */
std::mt19937_64 sample_rng(std::uint64_t root, std::uint64_t counter);

/** @brief Number of worker threads used by parallel loops (0 means hardware count). */
void set_thread_count(unsigned n);
unsigned thread_count();

/** @brief Runs body(i) for i in [0, n) across threads; body must write to disjoint slots. */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/** @brief C-infinity transition: 0 for x <= 0, 1 for x >= 1, smooth monotone in between. */
double smooth_step(double x);

/** @brief Smooth plateau: 1 on |x| <= inner, 0 on |x| >= outer. */
double smooth_plateau(double x, double inner, double outer);

}  // namespace hyperlap
