#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperlap/group_core.hpp"

namespace hyperlap {

/**
 * @brief The tube base * T_delta^T(l, o), where T_delta^T(l, o) = {(z, e^t) : |z| <= delta, |t| <= T}.
 *
 * Throws DomainError unless 0 < delta <= 1 and 0 < T <= 20.
 */
struct TubeSpec {
    GroupElement base;
    double delta = 0.1;
    double T = 2.0;

    TubeSpec() = default;
    TubeSpec(const GroupElement& base, double delta, double T);
};

/** @brief One grid interval [lo, hi] with its center. */
struct GridInterval {
    double lo = 0.0, hi = 0.0, center = 0.0;
};

/**
 * @brief Boundary directions b_m (m < N1) and transverse offsets x_n (n <= N2) labelling geodesic beams.
 *
 * directions[m] is the interval of angles 2 pi (m +- 2/3) / N1 with center 2 pi m / N1 (mod 2 pi);
 * offsets[n] is 4 (n - N2/2 +- 2/3) / N2 with center x_n = 4 (n - N2/2) / N2.
 */
struct BeamGrid {
    double lambda = 0.0, beta = 0.0, eps1 = 0.0;
    int N1 = 0, N2 = 0;
    std::vector<GridInterval> directions;
    std::vector<GridInterval> offsets;

    std::size_t size() const { return directions.size() * offsets.size(); }
    BoundaryPoint b(int m) const { return BoundaryPoint::canonical(directions[std::size_t(m)].center); }
    double x(int n) const { return offsets[std::size_t(n)].center; }
    /** @brief b_m n(x_n), the element carrying (l, o) to the beam geodesic. */
    GroupElement element(int m, int n) const;
};

BeamGrid build_beam_grid(double lambda, double beta, double eps1);

/** @brief Tube membership of a point of upper half-space. */
bool tube_contains(const TubeSpec& tube, const H3Point& p);

/** @brief Largest transverse radius |z| and largest |log height| of base^{-1} g a(t) o over the 64 samples. */
struct SegmentExtent {
    double radius = 0.0;
    double height = 0.0;
};
SegmentExtent segment_extent(const GroupElement& g, const GroupElement& base, double halflen);

/**
 * @brief Whether g a(t) o lies in the tube for 64 equally spaced t in [-halflen, halflen].
 *
 * Throws DomainError if dist(g, e) > c0.
 */
bool segment_in_tube(const GroupElement& g, const TubeSpec& tube, double halflen, double c0 = 3.0);

/** @brief Number of beams b_m n(x_n) l_[-1,1] contained in the tube. */
int count_tube_beams(const TubeSpec& tube, const BeamGrid& grid);

/**
 * @brief #{(m1, n1, m2, n2) : dist(n(-x_n1) b_m1^{-1} g b_m2 n(x_n2), MA) <= delta}.
 *
 * Exhaustive over pairs of beams with a necessary-condition prefilter before the exact distance.
 * Throws DomainError if dist(g, e) > c0 and ResourceError if N1 N2 > 10^4.
 */
long count_quadruples(const GroupElement& g, double delta, const BeamGrid& grid, double c0 = 3.0);

/** @brief Distance to MA for h in a neighbourhood of MA after normalizing the torus part on the left. */
double dist_to_ma_fast(const GroupElement& h);

/** @brief Distance from the compact element k to M' = M u w0 M. */
double dist_to_mprime(const GroupElement& k);

enum class PairKind { OrientationPreserving, OrientationReversing, Neither };

std::string to_string(PairKind kind);

/**
 * @brief Classification of two beams by dist(n(-x1) b1^{-1} b2 n(x2), MA) and to w0 MA.
 *
 * direction_gap and offset_gap are d(b1, b2) and |x1 - x2| when preserving, and the distance of b1^{-1} b2
 * to +-(1 + x2^2)^{-1/2} [[x2, 1], [-1, x2]] and |x1 + x2| when reversing.
 */
struct PairClassification {
    PairKind kind = PairKind::Neither;
    double dist_ma = 0.0;
    double dist_w0ma = 0.0;
    double direction_gap = 0.0;
    double offset_gap = 0.0;
};
PairClassification close_pair_classify(const BoundaryPoint& b1, double x1, const BoundaryPoint& b2, double x2,
                                       double delta);

/**
 * @brief g = k1 n(z) k(theta) a(t) k2 with k1 in SO(2) and k2 in SO(2) u w0 SO(2) when g H2 meets H2.
 *
 * Otherwise positive_distance is set and plane_distance holds the distance between the planes.
 */
struct NearH2Decomposition {
    bool positive_distance = false;
    double plane_distance = 0.0;
    GroupElement k1;
    cplx z{0.0};
    double theta = 0.0;
    double t = 0.0;
    GroupElement k2;

    GroupElement reassemble() const;
};

NearH2Decomposition decompose_near_h2(const GroupElement& g, double c0 = 3.0);

/** @brief Hyperbolic distance between the vertical plane over the real axis and g of it, by minimization. */
double plane_distance(const GroupElement& g);

/**
 * @brief Sampled line search for a length-2 geodesic segment of g H2 inside the tube.
 *
 * Candidates are the geodesics of g H2 through the projections of axis points at t0 - 1 and t0 + 1,
 * t0 on a grid of step 1/8 in [-T + 1, T - 1]; membership is the 64-point tube test.
 */
bool plane_segment_in_tube(const GroupElement& g, const TubeSpec& tube);

/** @brief Number of beams whose (delta, T)-tube holds a length-2 segment of g H2. */
int count_plane_beams(const GroupElement& g, double delta, double T, const BeamGrid& grid);

/** @brief m a(t) exp(X) (optionally times w0 on the left) with |X| = offset in a random direction, |t| <= 1. */
GroupElement random_near_mprime_a(std::mt19937_64& rng, double offset);

/** @brief h exp(i omega Y) for h in a bounded part of SL(2,R) and a unit real traceless Y. */
GroupElement random_off_hprime(std::mt19937_64& rng, double omega);

/** @brief One counting experiment, written as (seed, lambda, beta, eps1, delta, omega, count, bound, ratio). */
struct CountRow {
    std::uint64_t seed = 0;
    double lambda = 0.0, beta = 0.0, eps1 = 0.0, delta = 0.0, omega = 0.0;
    long count = 0;
    double bound = 0.0;
    double ratio = 0.0;

    static std::string csv_header();
    std::string csv() const;
};

/** @brief Random tubes around beam-like segments; one row per tube, bound (1 + delta N1)(1 + delta N2). */
std::vector<CountRow> tube_count_experiment(std::uint64_t seed, int tubes, double delta, double T,
                                            const BeamGrid& grid);

/** @brief Empirical constants for both directions of the segment-inclusion correspondence. */
struct InclusionReport {
    int samples = 0;
    double forward_constant = 0.0;   // max segment radius / d(g, M'A)
    double converse_constant = 0.0;  // max d(g, M'A) / segment radius
    double max_height = 0.0;         // largest |log height| met along the segments
};

/** @brief Random g at M'A-distance about offset; segment of half-length 1 against T_delta^T(l, o). */
InclusionReport inclusion_experiment(std::uint64_t seed, int samples, double offset);

/** @brief Max |z'| / delta over tube points of T_delta^{T/2} mapped by k with dist(k, M') = delta. */
double tube_rotation_constant(std::uint64_t seed, int rotations, int points, double delta, double T);

/**
 * @brief Max over random instances of the smallest C with g T_delta^T(l, o) inside T_{C delta}^{C T}(l, o),
 * for g such that l_[-1,1] lies in g T_delta^T(l, o).
 */
double tube_enlargement_constant(std::uint64_t seed, int instances, int points, double delta, double T);

}  // namespace hyperlap
