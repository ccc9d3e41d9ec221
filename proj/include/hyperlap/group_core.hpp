#pragma once

#include <complex>
#include <random>

#include "hyperlap/numerics.hpp"

namespace hyperlap {

/**
 * @brief Unimodular complex 2x2 matrix [[a, b], [c, d]] representing a point of SL(2,C).
 *
 * Products renormalize by sqrt(det) once the determinant drifts by more than 1e-12.
 */
struct GroupElement {
    cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    static GroupElement identity() { return {}; }
    cplx det() const { return a * d - b * c; }
    GroupElement inverse() const { return {d, -b, -c, a}; }
    GroupElement adjoint() const { return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)}; }
    GroupElement operator-() const { return {-a, -b, -c, -d}; }
    GroupElement normalized() const;
    bool finite() const;
    /** @brief Max entrywise modulus of the difference. */
    double max_diff(const GroupElement& o) const;
    /** @brief Max entrywise deviation of g* g from the identity. */
    double unitarity_defect() const;
};

GroupElement operator*(const GroupElement& x, const GroupElement& y);

/** @brief n(z) = [[1, z], [0, 1]]. */
GroupElement n_elem(cplx z);
/** @brief a(t) = diag(e^{t/2}, e^{-t/2}). */
GroupElement a_elem(double t);
/** @brief k(theta) = diag(e^{i theta}, e^{-i theta}), the compact torus M. */
GroupElement m_elem(double theta);
/** @brief Rotation [[cos phi, sin phi], [-sin phi, cos phi]] in SO(2). */
GroupElement so2_elem(double phi);
/** @brief Boundary representative b_theta = so2_elem(theta / 2). */
GroupElement b_elem(double theta);
/** @brief Weyl element [[0, i], [i, 0]]. */
GroupElement w0_elem();
/** @brief Critical unitary element with Psi = 0 and Theta = rho. */
GroupElement k_rho_elem(double rho);

/** @brief Boundary point of B = SO(2)/{+-I}, canonical theta in [0, 2 pi). */
struct BoundaryPoint {
    double theta = 0.0;
    static BoundaryPoint canonical(double theta);
    GroupElement element() const { return b_elem(theta); }
};

/** @brief Coefficients in X1, X2, X3 (compact part), H (diagonal) and X (nilpotent). */
struct LieVector {
    double x1 = 0.0, x2 = 0.0, x3 = 0.0, h = 0.0, x = 0.0;
    /** @brief Traceless matrix [[z1, z2], [z3, -z1]] stored in a GroupElement slot layout. */
    GroupElement matrix() const;
    /** @brief sqrt(|z1|^2 + |z2|^2 + |z3|^2) of the matrix. */
    double norm() const;
};

/** @brief Norm sqrt(|z1|^2+|z2|^2+|z3|^2) of a traceless matrix given in [[z1,z2],[z3,-z1]] form. */
double sl2_norm(const GroupElement& m);
/** @brief Exponential of a traceless 2x2 matrix via exp(Z) = cosh(mu) I + sinh(mu)/mu Z, mu^2 = -det Z. */
GroupElement exp_sl2(const GroupElement& z);
/** @brief Principal logarithm of an SL(2,C) element (sign chosen so Re tr >= 0). */
GroupElement log_sl2(const GroupElement& g);

struct IwasawaCoords {
    cplx z;
    double t = 0.0;
    GroupElement k;
};

/** @brief Point (z, height) of upper half-space; the origin o is (0, 1). */
struct H3Point {
    cplx z{0.0};
    double height = 1.0;
};

struct PsiTheta {
    double psi = 0.0;
    double theta = 0.0;
};

enum class Subgroup { MA, MprimeA, Hprime, K0 };

/** @brief g = n(z) a(t) k with k = kappa(g). Throws DomainError on non-finite input. */
IwasawaCoords iwasawa_decompose(const GroupElement& g);
/** @brief A(g) = -log(|c|^2 + |d|^2). */
double iwasawa_A(const GroupElement& g);
/** @brief (|c|^2+|d|^2)^{-1/2} [[conj d, -conj c], [c, d]]. */
GroupElement kappa(const GroupElement& g);
/** @brief Action on upper half-space; throws DomainError for height <= 0. */
H3Point act_h3(const GroupElement& g, const H3Point& p);
/** @brief Hyperbolic distance in upper half-space. */
double h3_distance(const H3Point& p, const H3Point& q);
/** @brief Phi_g(k) = kappa(k g). */
GroupElement phi_action(const GroupElement& g, const GroupElement& k);
/** @brief (alpha conj(beta) + conj(alpha) beta, |alpha|^2 - |beta|^2) from the top row of k. */
PsiTheta psi_theta(const GroupElement& k);
/** @brief exp(r1 X1 + r2 X2) in closed form. */
GroupElement exp_k(double r1, double r2);
/** @brief Norm of the principal logarithm of g^{-1} h. */
double dist(const GroupElement& g, const GroupElement& h);
/** @brief Distance to MA, M'A, H' or K0; requires dist(g, e) <= 10. */
double dist_to_subgroup(const GroupElement& g, Subgroup which);

/** @brief exp of a random Lie algebra element with Gaussian coefficients of the given scale. */
GroupElement random_element(std::mt19937_64& rng, double scale);
/** @brief Haar-random element of SU(2). */
GroupElement random_unitary(std::mt19937_64& rng);

}  // namespace hyperlap
