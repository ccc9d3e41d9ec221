#include "hyperlap/hecke_amplifier.hpp"

#include <cctype>
#include <string>
#include <utility>
#include <vector>

#include "hyperlap/errors.hpp"

namespace hyperlap {

namespace {

Integer ipow(std::int64_t base, int e) {
    Integer r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

Rational rabs(const Rational& x) { return x < 0 ? Rational(-x) : x; }

void require_tree(std::int64_t Q) {
    if (Q < 2) throw DomainError("tree parameter Q must be >= 2, got " + std::to_string(Q));
}

// Vertices at distance l >= 1 from p whose first step leaves p through one of `exits` edges.
Integer branch_count(std::int64_t Q, int exits, int l) { return Integer(exits) * ipow(Q, l - 1); }

}  // namespace

Rational parse_rational(const std::string& text) {
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
    const auto slash = s.find('/');
    auto parse_int = [&](const std::string& part) {
        std::size_t start = (!part.empty() && (part[0] == '-' || part[0] == '+')) ? 1 : 0;
        if (part.size() == start) throw DomainError("malformed rational '" + text + "'");
        for (std::size_t i = start; i < part.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(part[i])))
                throw DomainError("malformed rational '" + text + "'");
        return Integer(part[0] == '+' ? part.substr(1) : part);
    };
    if (slash == std::string::npos) return Rational(parse_int(s));
    const Integer num = parse_int(s.substr(0, slash));
    const Integer den = parse_int(s.substr(slash + 1));
    if (den == 0) throw DomainError("zero denominator in '" + text + "'");
    return Rational(num, den);
}

std::string to_string(const Rational& x) {
    const Integer n = boost::multiprecision::numerator(x);
    const Integer d = boost::multiprecision::denominator(x);
    return d == 1 ? n.str() : n.str() + "/" + d.str();
}

Rational HeckeCombination::coefficient(int a) const {
    const auto it = coefficients.find(a);
    return it == coefficients.end() ? Rational(0) : it->second;
}

void HeckeCombination::add(int a, const Rational& c) {
    if (a < 0) throw DomainError("Hecke radius must be >= 0");
    if (c == 0) return;
    Rational& slot = coefficients[a];
    slot += c;
    if (slot == 0) coefficients.erase(a);
}

HeckeCombination operator+(const HeckeCombination& x, const HeckeCombination& y) {
    if (x.Q != y.Q) throw DomainError("Hecke combinations on different trees");
    HeckeCombination r = x;
    for (const auto& [a, c] : y.coefficients) r.add(a, c);
    return r;
}

HeckeCombination operator*(const Rational& s, const HeckeCombination& x) {
    HeckeCombination r{x.Q, {}};
    for (const auto& [a, c] : x.coefficients) r.add(a, s * c);
    return r;
}

HeckeCombination operator*(const HeckeCombination& x, const HeckeCombination& y) {
    if (x.Q != y.Q) throw DomainError("Hecke combinations on different trees");
    HeckeCombination r{x.Q, {}};
    for (const auto& [a, ca] : x.coefficients)
        for (const auto& [b, cb] : y.coefficients) {
            const HeckeCombination ab = hecke_product(x.Q, a, b);
            for (const auto& [c, cc] : ab.coefficients) r.add(c, ca * cb * cc);
        }
    return r;
}

HeckeCombination hecke_basis(std::int64_t Q, int a) {
    require_tree(Q);
    HeckeCombination r{Q, {}};
    r.add(a, Rational(1));
    return r;
}

Integer sphere_size(std::int64_t Q, int a) {
    require_tree(Q);
    if (a < 0) throw DomainError("sphere radius must be >= 0");
    if (a == 0) return 1;
    return Integer(Q + 1) * ipow(Q, 2 * a - 1);
}

HeckeCombination hecke_product(std::int64_t Q, int a, int b) {
    require_tree(Q);
    if (a < 0 || b < 0) throw DomainError("Hecke radii must be >= 0");
    if (2 * (a + b) > kMaxTreeDepth)
        throw ResourceError("tree depth " + std::to_string(2 * (a + b)) + " exceeds the cap of " +
                            std::to_string(kMaxTreeDepth));
    HeckeCombination r{Q, {}};
    const int lo = a > b ? a - b : b - a;
    for (int c = lo; c <= a + b; ++c) {
        const int D = 2 * c;  // geodesic x = v_0, ..., v_D = y
        Integer count = 0;
        for (int p = 0; p <= D; ++p) {
            const int l = 2 * a - p;
            if (l < 0 || D - p + l != 2 * b) continue;
            if (l == 0) {
                count += 1;
                continue;
            }
            int exits;
            if (D == 0) exits = static_cast<int>(Q + 1);
            else if (p == 0 || p == D) exits = static_cast<int>(Q);
            else exits = static_cast<int>(Q - 1);
            count += branch_count(Q, exits, l);
        }
        r.add(c, Rational(count));
    }
    return r;
}

std::int64_t tree_parameter(std::int64_t q, Regime regime) {
    if (q < 2) throw DomainError("residue field size must be >= 2, got " + std::to_string(q));
    return regime == Regime::split ? q : q * q;
}

namespace {
Rational relation_tau2(std::int64_t Q, const Rational& tau1) {
    const Rational inv(Integer(1), Integer(Q));
    return tau1 * tau1 - (1 - inv) * tau1 - (1 + inv);
}
}  // namespace

EigenData::EigenData(std::int64_t q, Rational tau1, Rational tau2, Regime regime)
    : q_(q), tau1_(std::move(tau1)), tau2_(std::move(tau2)), regime_(regime) {
    const Rational expected = relation_tau2(tree_parameter(q_, regime_), tau1_);
    if (tau2_ != expected)
        throw DomainError("tau2 = " + to_string(tau2_) + " violates the Hecke relation (expected " +
                          to_string(expected) + ")");
}

EigenData EigenData::from_tau1(std::int64_t q, const Rational& tau1, Regime regime) {
    return EigenData(q, tau1, relation_tau2(tree_parameter(q, regime), tau1), regime);
}

Rational EigenData::eigenvalue(int a) const {
    if (a < 0) throw DomainError("Hecke radius must be >= 0");
    const std::int64_t Q = this->Q();
    std::vector<Rational> lam{Rational(1), tau1_ * Q, tau2_ * Q * Q};
    // T(1) T(k) = sum_c n_c T(c) with n_{k+1} = 1 fixes the next eigenvalue.
    for (int k = 2; static_cast<int>(lam.size()) <= a; ++k) {
        const HeckeCombination prod = hecke_product(Q, 1, k);
        Rational next = lam[1] * lam[k];
        for (const auto& [c, n] : prod.coefficients)
            if (c <= k) next -= n * lam[c];
        lam.push_back(next / prod.coefficient(k + 1));
    }
    return lam[a];
}

Rational eigenvalue(const HeckeCombination& x, const EigenData& data) {
    if (x.Q != data.Q()) throw DomainError("combination and eigen-data live on different trees");
    Rational r = 0;
    for (const auto& [a, c] : x.coefficients) r += c * data.eigenvalue(a);
    return r;
}

Rational dichotomy_check(std::int64_t q, const Rational& tau1, Regime regime) {
    const Rational tau2 = relation_tau2(tree_parameter(q, regime), tau1);
    const Rational quarter(1, 4);
    if (rabs(tau1) <= quarter && rabs(tau2) <= quarter)
        throw AccuracyError("both normalized eigenvalues are at most 1/4 at q = " + std::to_string(q),
                            static_cast<double>(rabs(tau2)));
    return tau2;
}

HeckeCombination amplifier_select(const EigenData& data) {
    const std::int64_t Q = data.Q();
    const Rational quarter(1, 4);
    if (rabs(data.tau1()) > quarter) return Rational(1) / (data.tau1() * Q) * hecke_basis(Q, 1);
    const Rational tau2 = dichotomy_check(data.q(), data.tau1(), data.regime());
    return Rational(1) / (tau2 * Q * Q) * hecke_basis(Q, 2);
}

Rational l1_norm(const HeckeCombination& x) {
    Rational r = 0;
    for (const auto& [a, c] : x.coefficients) r += rabs(c) * sphere_size(x.Q, a);
    return r;
}

Rational l2_norm_squared(const HeckeCombination& x) {
    Rational r = 0;
    for (const auto& [a, c] : x.coefficients) r += c * c * sphere_size(x.Q, a);
    return r;
}

AmplifierNorms amplifier_norms(const std::vector<EigenData>& places, std::int64_t N, const Rational& max_constant) {
    AmplifierNorms out;
    if (places.empty()) return out;
    if (N < 2) throw DomainError("N must be >= 2");
    for (const EigenData& v : places) {
        if (2 * v.q() < N || v.q() > N)
            throw DomainError("place with q = " + std::to_string(v.q()) + " outside [N/2, N]");
        HeckeCombination t = amplifier_select(v);
        out.l1 += l1_norm(t);
        out.l2sq += l2_norm_squared(t);
        // Operators are real and symmetric, so T_v^* = T_v and (T_v * T_v)(e) is the T(0) coefficient.
        out.a_O += (t * t).coefficient(0);
        out.amplifiers.push_back(std::move(t));
    }
    if (out.a_O != out.l2sq)
        throw AccuracyError("identity coefficient disagrees with the summed squared norms",
                            static_cast<double>(rabs(out.a_O - out.l2sq)));
    const Integer num = boost::multiprecision::numerator(out.l1);
    const Integer den = boost::multiprecision::denominator(out.l1);
    out.l1_bound = (num + den - 1) / den;
    out.constant = out.a_O / N;
    if (out.constant > max_constant)
        throw AccuracyError("a_O exceeds " + to_string(max_constant) + " N", static_cast<double>(out.constant));
    return out;
}

}  // namespace hyperlap
