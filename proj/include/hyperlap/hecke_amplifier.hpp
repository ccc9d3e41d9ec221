#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace hyperlap {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/** @brief Exact rational from "p", "p/q" or "-p/q"; throws DomainError on malformed input. */
Rational parse_rational(const std::string& text);
/** @brief "p" or "p/q" in lowest terms. */
std::string to_string(const Rational& x);

/**
 * @brief Finite combination sum_a c_a T(a) of Hecke operators on the (Q+1)-regular tree.
 *
 * T(a) is the indicator of the sphere of radius 2a; T(0) is the identity. Zero coefficients are never stored.
 */
struct HeckeCombination {
    std::int64_t Q = 2;
    std::map<int, Rational> coefficients;

    Rational coefficient(int a) const;
    void add(int a, const Rational& c);
    bool operator==(const HeckeCombination& other) const = default;
};

HeckeCombination operator+(const HeckeCombination& x, const HeckeCombination& y);
HeckeCombination operator*(const Rational& s, const HeckeCombination& x);
/** @brief Convolution product, expanded back into the T(c) basis. Q must agree. */
HeckeCombination operator*(const HeckeCombination& x, const HeckeCombination& y);

/** @brief Single basis element T(a). */
HeckeCombination hecke_basis(std::int64_t Q, int a);

/** @brief Number of vertices at distance 2a from a fixed vertex of the (Q+1)-regular tree. */
Integer sphere_size(std::int64_t Q, int a);

/** @brief Largest tree depth 2(a + b) that hecke_product will enumerate. */
constexpr int kMaxTreeDepth = 24;

/**
 * @brief T(a) * T(b) in the T(c) basis by path counting on the (Q+1)-regular tree.
 *
 * For x, y at distance 2c the coefficient of T(c) counts z with d(x, z) = 2a and d(z, y) = 2b. Vertices z are
 * enumerated as classes labelled by the vertex p of the geodesic [x, y] closest to z and the length l of the
 * branch from p to z; each class is counted in closed form. Throws DomainError for Q < 2 or a, b < 0 and
 * ResourceError when 2(a + b) exceeds kMaxTreeDepth.
 */
HeckeCombination hecke_product(std::int64_t Q, int a, int b);

/** @brief Local type of a place: the tree parameter is Q = q (split) or Q = q^2 (inert). */
enum class Regime { split, inert };

std::int64_t tree_parameter(std::int64_t q, Regime regime);

/**
 * @brief Normalized eigenvalues of a spherical eigenvector: T(1) = tau1 Q and T(2) = tau2 Q^2.
 *
 * The constructor checks tau2 = tau1^2 - (1 - 1/Q) tau1 - (1 + 1/Q), which is T(1)^2 = Q(Q+1) + (Q-1) T(1) + T(2)
 * after normalization, and throws DomainError otherwise.
 */
class EigenData {
public:
    EigenData(std::int64_t q, Rational tau1, Rational tau2, Regime regime = Regime::inert);
    /** @brief tau2 from the relation. */
    static EigenData from_tau1(std::int64_t q, const Rational& tau1, Regime regime = Regime::inert);

    std::int64_t q() const { return q_; }
    std::int64_t Q() const { return tree_parameter(q_, regime_); }
    Regime regime() const { return regime_; }
    const Rational& tau1() const { return tau1_; }
    const Rational& tau2() const { return tau2_; }

    /** @brief Eigenvalue of T(a), extended past a = 2 through the T(1) * T(a) recursion. */
    Rational eigenvalue(int a) const;

private:
    std::int64_t q_;
    Rational tau1_, tau2_;
    Regime regime_;
};

/** @brief Eigenvalue of a combination on the eigen-data. */
Rational eigenvalue(const HeckeCombination& x, const EigenData& data);

/** @brief tau2 from the relation; throws AccuracyError if |tau1| <= 1/4 and |tau2| <= 1/4 both hold. */
Rational dichotomy_check(std::int64_t q, const Rational& tau1, Regime regime = Regime::inert);

/** @brief T(1) / (tau1 Q) if |tau1| > 1/4, otherwise T(2) / (tau2 Q^2); eigenvalue 1 on the data. */
HeckeCombination amplifier_select(const EigenData& data);

/** @brief ||T||_1 and ||T||_2^2 of a combination, with T(a) of L1 and squared L2 norm sphere_size(Q, a). */
Rational l1_norm(const HeckeCombination& x);
Rational l2_norm_squared(const HeckeCombination& x);

struct AmplifierNorms {
    Rational l1;          // sum_v ||T_v||_1
    Integer l1_bound;     // ceil(l1)
    Rational l2sq;        // sum_v ||T_v||_2^2
    Rational a_O;         // (T_N * T_N^*)(e), from the identity coefficients of T_v * T_v
    Rational constant;    // a_O / N (0 for an empty list)
    std::vector<HeckeCombination> amplifiers;
};

/**
 * @brief Norms of T_N = sum_v T_v with T_v = amplifier_select(places[v]).
 *
 * Every place needs N/2 <= q_v <= N. l2sq is summed from sphere sizes and a_O from the product table;
 * they must agree since distinct places have disjoint supports. Throws AccuracyError if a_O > max_constant N.
 */
AmplifierNorms amplifier_norms(const std::vector<EigenData>& places, std::int64_t N,
                               const Rational& max_constant = Rational(24));

}  // namespace hyperlap
