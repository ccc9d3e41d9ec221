#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperlap/geometry_tubes.hpp"
#include "hyperlap/transforms.hpp"

namespace hyperlap {

/**
 * @brief Even bump: 1 on [-1/3, 1/3], 0 outside (-2/3, 2/3), with sum_n eta(x + n) = 1 identically.
 *
 * The transition is 1 - S(3|x| - 1) for the symmetric smooth step S(u) + S(1 - u) = 1.
 */
double bump_eta(double x);

/** @brief Direction taper tau_m(theta) = eta(N1 (theta - theta_m) / 2 pi), angle difference taken mod 2 pi. */
double direction_taper(const BeamGrid& grid, int m, double theta);

/** @brief Transverse bump eta_n(x) = eta(N2 (x - x_n) / 4), supported in the offset interval J_n. */
double offset_bump(const BeamGrid& grid, int n, double x);

/** @brief Iwasawa x-coordinate of b_m^{-1} z. */
double beam_offset_coordinate(const BeamGrid& grid, int m, const H2Point& z);

/**
 * @brief Product cutoff chi(x + i e^t) = P(x) P(t) with P = 1 on [-inner, inner] and 0 outside (-outer, outer).
 *
 * outer <= 1 keeps the support inside the square |x|, |t| <= 1. The offsets x_n only cover [-2, 2], so every
 * rotation b^{-1} of the support must stay in |x| <= 2; the default outer = 0.75 gives hyperbolic radius
 * below asinh(2).
 */
struct BeamCutoff {
    double inner = 0.4;
    double outer = 0.75;

    double operator()(const H2Point& z) const;
};

/**
 * @brief Iwasawa grid over the cutoff support, fine enough that |phi|^2 (frequencies up to 2 lambda) is not aliased.
 */
H2Grid beam_sample_grid(double lambda, const BeamCutoff& chi);

/**
 * @brief Random spectrum in [lambda - beta, lambda + beta] x B: a rank-3 sum of smooth s-profiles times
 * random trigonometric polynomials in theta of degree 6.
 */
SpectralFunction random_band_limited(std::uint64_t seed, double lambda, double beta, std::size_t nb);

/** @brief One beam stored on its support: sample indices into the family grid and values. */
struct SparseBeam {
    int m = 0, n = 0;
    std::vector<std::uint32_t> index;
    std::vector<cplx> values;
};

/**
 * @brief The beams phi_{m,n} = chi(z) eta_n(b_m^{-1} z) F^{-1}(phi~ tau_m)(z) of a band-limited spectrum.
 *
 * beams are ordered m-major; target holds chi * phi on the whole sample grid.
 */
struct BeamFamily {
    BeamGrid grid;
    H2Grid samples;
    BeamCutoff chi;
    double band_lo = 0.0, band_hi = 0.0;
    std::vector<SparseBeam> beams;
    std::vector<cplx> target;
    double target_norm2 = 0.0;    // ||chi phi||^2
    double spectral_norm2 = 0.0;  // ||phi~||^2 by Plancherel

    const SparseBeam& beam(int m, int n) const;
    double norm2(const SparseBeam& b) const;
    double norm1(const SparseBeam& b) const;
    /** @brief Dense sum of the listed beams (indices into beams), accumulated in list order. */
    std::vector<cplx> sum(const std::vector<std::size_t>& subset) const;
    std::vector<cplx> sum_all() const;
    /** @brief L2 norm squared of a dense grid function. */
    double dense_norm2(const std::vector<cplx>& f) const;
    /** @brief sum ||phi_{m,n}||^2 / ||chi phi||^2. */
    double square_sum_constant() const;
};

/**
 * @brief Splits chi * F^{-1}(phi~) into beams.
 *
 * Each boundary column is demodulated once, H_k(A) = sum_j w_j phi~(s_j, b_k) e^{i (s_j - lambda) A}, tabulated
 * on an A-grid and interpolated; the synthesis at z is e^{(i lambda + 1/2) A} H_k(A) with A = A(z, b_k).
 * Throws DomainError if the band is not inside (0, inf), the spectrum has mass outside the band, or the
 * cutoff leaves the unit square.
 */
BeamFamily beam_decompose(const SpectralFunction& phi, const BeamCutoff& chi, double lambda, double beta,
                          double eps1);
BeamFamily beam_decompose(const SpectralFunction& phi, const BeamCutoff& chi, double lambda, double beta,
                          double eps1, const H2Grid& samples);

/** @brief Beams split by ||phi_{m,n}||^2 >= delta C ||chi phi||^2; entries index into family.beams. */
struct BeamClassification {
    std::vector<std::size_t> large;
    std::vector<std::size_t> small;
};

/**
 * @brief Threshold split of the beams.
 *
 * Throws DomainError if delta <= 0 or C is below the family's square-sum constant, and AccuracyError if
 * the large set has more than 1/delta elements.
 */
BeamClassification classify_beams(const BeamFamily& family, double delta, double C);

/** @brief ||phi_{m,n}||_1 / ||phi_{m,n}||_2 per beam (0 for a zero beam) and the normalized maximum. */
struct BeamRatioReport {
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double scale = 0.0;     // lambda^{-1/4} beta^{1/4}
    double constant = 0.0;  // max_ratio / scale
};
BeamRatioReport beam_l1_l2(const BeamFamily& family);

/** @brief |‖sum_S phi_{m,n}‖^2 - sum_S ‖phi_{m,n}‖^2| / ‖chi phi‖^2 for a subset S of beam indices. */
double cross_term_constant(const BeamFamily& family, const std::vector<std::size_t>& subset);

/** @brief Spectral energy of one beam split by a smooth cutoff equal to 1 on 2 I_m and 0 off 4 I_m. */
struct BeamLeakage {
    double total = 0.0;     // spectral norm squared over the s-window
    double outside = 0.0;   // the part weighted by (1 - cutoff)^2
    double spatial = 0.0;   // ||phi_{m,n}||^2 on the grid
    double fraction() const { return total > 0.0 ? outside / total : 0.0; }
};

/** @brief Forward transform of one beam on s in [lambda/2, 3 lambda/2] (step ds) times nb directions. */
BeamLeakage beam_leakage(const BeamFamily& family, int m, int n, std::size_t nb, double ds);

/** @brief Directory with grid.json and beam_<m>_<n>.bin (header-length, JSON header, uint32 index, complex payload). */
void save_beam_family(const BeamFamily& family, const std::string& dir);
BeamFamily load_beam_family(const std::string& dir);

}  // namespace hyperlap
