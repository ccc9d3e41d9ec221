#include "hyperlap/beams.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hyperlap/errors.hpp"
#include "hyperlap/numerics.hpp"

namespace hyperlap {

namespace {

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

double iwasawa_t(const H2Point& z) { return std::log(z.y); }

double dist_to_origin(const H2Point& z) {
    const double c = 1.0 + (z.x * z.x + (z.y - 1.0) * (z.y - 1.0)) / (2.0 * z.y);
    return std::acosh(std::max(1.0, c));
}

// Uniform table of a complex function of A with 4-point Lagrange interpolation.
struct ColumnTable {
    double a0 = 0.0, h = 0.01;
    std::vector<cplx> v;

    cplx operator()(double a) const {
        const double u = (a - a0) / h;
        long i = long(std::floor(u)) - 1;
        i = std::clamp(i, 0L, long(v.size()) - 4);
        const double p = u - double(i);  // in [1, 2) away from the ends
        const double l0 = -(p - 1.0) * (p - 2.0) * (p - 3.0) / 6.0;
        const double l1 = p * (p - 2.0) * (p - 3.0) / 2.0;
        const double l2 = -p * (p - 1.0) * (p - 3.0) / 2.0;
        const double l3 = p * (p - 1.0) * (p - 2.0) / 6.0;
        const cplx* q = v.data() + i;
        return l0 * q[0] + l1 * q[1] + l2 * q[2] + l3 * q[3];
    }
};

void check_cutoff(const BeamCutoff& chi) {
    if (!(chi.inner >= 0.0) || !(chi.outer > chi.inner) || chi.outer > 1.0)
        throw DomainError("beam cutoff: need 0 <= inner < outer <= 1");
}

}  // namespace

double bump_eta(double x) {
    const double ax = std::abs(x);
    if (ax <= 1.0 / 3.0) return 1.0;
    if (ax >= 2.0 / 3.0) return 0.0;
    return 1.0 - smooth_step(3.0 * ax - 1.0);
}

double direction_taper(const BeamGrid& grid, int m, double theta) {
    if (grid.N1 == 1) return 1.0;
    const double c = grid.directions[std::size_t(m)].center;
    return bump_eta(double(grid.N1) * wrap_angle(theta - c) / (2.0 * kPi));
}

double offset_bump(const BeamGrid& grid, int n, double x) {
    return bump_eta(double(grid.N2) * (x - grid.x(n)) / 4.0);
}

double beam_offset_coordinate(const BeamGrid& grid, int m, const H2Point& z) {
    // b_m^{-1} = so2(-phi) acts as z -> (c z - s) / (s z + c), phi = theta_m / 2.
    const double phi = 0.5 * grid.directions[std::size_t(m)].center;
    const double c = std::cos(phi), s = std::sin(phi);
    const double dr = s * z.x + c, di = s * z.y;
    const double nr = c * z.x - s, ni = c * z.y;
    return (nr * dr + ni * di) / (dr * dr + di * di);
}

double BeamCutoff::operator()(const H2Point& z) const {
    return smooth_plateau(z.x, inner, outer) * smooth_plateau(iwasawa_t(z), inner, outer);
}

H2Grid beam_sample_grid(double lambda, const BeamCutoff& chi) {
    check_cutoff(chi);
    if (!(lambda > 0.0)) throw DomainError("beam_sample_grid: lambda must be positive");
    // |phi|^2 oscillates at frequency <= 2 lambda in t and <= 2 lambda e^{outer} in x; sample at 1.5x that rate.
    const double L = chi.outer;
    const double ht = std::min(1e-2, 2.0 * kPi / (1.5 * 2.0 * lambda));
    const double hx = std::min(1e-2, ht * std::exp(-L));
    H2Grid g;
    g.nx = std::size_t(std::ceil(2.0 * L / hx)) + 1;
    g.nt = std::size_t(std::ceil(2.0 * L / ht)) + 1;
    g.dx = 2.0 * L / double(g.nx - 1);
    g.dt = 2.0 * L / double(g.nt - 1);
    g.x0 = -L;
    g.t0 = -L;
    return g;
}

SpectralFunction random_band_limited(std::uint64_t seed, double lambda, double beta, std::size_t nb) {
    if (!(beta > 0.0) || !(lambda - beta > 0.0) || nb < 4)
        throw DomainError("random_band_limited: need 0 < lambda - beta, beta > 0, nb >= 4");
    constexpr std::size_t ns = 17;
    constexpr int rank = 3, degree = 6;
    auto spec = SpectralFunction::zeros(Space::H2, lambda - beta, 2.0 * beta / double(ns - 1), ns, nb);
    spec.band_lo = lambda - beta;
    spec.band_hi = lambda + beta;
    auto rng = sample_rng(seed, 0);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    for (int r = 0; r < rank; ++r) {
        const double mu = unif(rng) * beta, width = 0.4 * beta * (1.0 + unif(rng));
        std::vector<cplx> coeff(2 * degree + 1);
        for (int q = -degree; q <= degree; ++q)
            coeff[std::size_t(q + degree)] = cplx(gauss(rng), gauss(rng)) / (1.0 + std::abs(q));
        for (std::size_t j = 0; j < ns; ++j) {
            const double u = (spec.s(j) - lambda) / beta;
            const double g = std::exp(-std::pow((spec.s(j) - lambda - mu) / width, 2)) * smooth_plateau(u, 0.5, 1.0);
            if (g == 0.0) continue;
            for (std::size_t k = 0; k < nb; ++k) {
                cplx c = 0.0;
                for (int q = -degree; q <= degree; ++q)
                    c += coeff[std::size_t(q + degree)] * std::polar(1.0, double(q) * spec.theta(k));
                spec.at(j, k) += g * c;
            }
        }
    }
    return spec;
}

const SparseBeam& BeamFamily::beam(int m, int n) const {
    const std::size_t idx = std::size_t(m) * std::size_t(grid.N2 + 1) + std::size_t(n);
    if (m < 0 || n < 0 || m >= grid.N1 || n > grid.N2 || idx >= beams.size())
        throw DomainError("BeamFamily::beam: index out of range");
    return beams[idx];
}

double BeamFamily::norm2(const SparseBeam& b) const {
    std::vector<double> t(b.index.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = samples.weight(b.index[i]) * std::norm(b.values[i]);
    return pairwise_sum(t.data(), t.size());
}

double BeamFamily::norm1(const SparseBeam& b) const {
    std::vector<double> t(b.index.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = samples.weight(b.index[i]) * std::abs(b.values[i]);
    return pairwise_sum(t.data(), t.size());
}

std::vector<cplx> BeamFamily::sum(const std::vector<std::size_t>& subset) const {
    std::vector<cplx> out(samples.size(), cplx(0.0));
    for (std::size_t s : subset) {
        if (s >= beams.size()) throw DomainError("BeamFamily::sum: beam index out of range");
        const SparseBeam& b = beams[s];
        for (std::size_t i = 0; i < b.index.size(); ++i) out[b.index[i]] += b.values[i];
    }
    return out;
}

std::vector<cplx> BeamFamily::sum_all() const {
    std::vector<std::size_t> all(beams.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return sum(all);
}

double BeamFamily::dense_norm2(const std::vector<cplx>& f) const {
    if (f.size() != samples.size()) throw DomainError("dense_norm2: size mismatch");
    std::vector<double> t(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) t[i] = samples.weight(i) * std::norm(f[i]);
    return pairwise_sum(t.data(), t.size());
}

double BeamFamily::square_sum_constant() const {
    if (!(target_norm2 > 0.0)) return 0.0;
    std::vector<double> t(beams.size());
    for (std::size_t i = 0; i < beams.size(); ++i) t[i] = norm2(beams[i]);
    return pairwise_sum(t.data(), t.size()) / target_norm2;
}

BeamFamily beam_decompose(const SpectralFunction& phi, const BeamCutoff& chi, double lambda, double beta,
                          double eps1) {
    return beam_decompose(phi, chi, lambda, beta, eps1, beam_sample_grid(lambda, chi));
}

BeamFamily beam_decompose(const SpectralFunction& phi, const BeamCutoff& chi, double lambda, double beta,
                          double eps1, const H2Grid& samples) {
    check_cutoff(chi);
    if (phi.space != Space::H2) throw DomainError("beam_decompose: H2 spectrum required");
    if (!(lambda - beta > 0.0) || !(beta > 0.0)) throw DomainError("beam_decompose: band must lie in (0, inf)");
    if (phi.s0 <= 0.0) throw DomainError("beam_decompose: spectrum grid must start above 0");
    const double tol = 1e-12;
    double peak = 0.0;
    for (const cplx& v : phi.values) peak = std::max(peak, std::abs(v));
    for (std::size_t j = 0; j < phi.ns; ++j) {
        const double s = phi.s(j);
        if (s >= lambda - beta - 1e-9 && s <= lambda + beta + 1e-9) continue;
        for (std::size_t k = 0; k < phi.nb; ++k)
            if (std::abs(phi.at(j, k)) > tol * peak) throw DomainError("beam_decompose: spectrum leaves the band");
    }
    for (std::size_t idx = 0; idx < samples.size(); ++idx)
        if (chi(samples.point(idx)) > 0.0) {
            const H2Point z = samples.point(idx);
            if (std::abs(z.x) > 1.0 || std::abs(iwasawa_t(z)) > 1.0)
                throw DomainError("beam_decompose: cutoff support leaves the unit square");
        }

    BeamFamily fam;
    fam.grid = build_beam_grid(lambda, beta, eps1);
    fam.samples = samples;
    fam.chi = chi;
    fam.band_lo = lambda - beta;
    fam.band_hi = lambda + beta;
    const auto& cal = plancherel(Space::H2);
    fam.spectral_norm2 = spectral_inner(phi, phi, cal).real();
    const std::size_t P = samples.size();
    const int N1 = fam.grid.N1, N2 = fam.grid.N2;

    // Demodulated column tables on |A| <= max d(z, o).
    double R = 0.0;
    for (std::size_t idx = 0; idx < P; ++idx) R = std::max(R, dist_to_origin(samples.point(idx)));
    const double h = std::min(0.01, 0.05 / (beta + 1.0));
    const std::size_t na = std::size_t(std::ceil(2.0 * R / h)) + 7;
    const std::vector<double> w = helgason_synthesis_weights(phi, cal);
    std::vector<std::size_t> cols;
    for (std::size_t k = 0; k < phi.nb; ++k)
        for (std::size_t j = 0; j < phi.ns; ++j)
            if (phi.at(j, k) != cplx(0.0)) {
                cols.push_back(k);
                break;
            }
    std::vector<ColumnTable> tables(cols.size());
    // (m, tau_m(theta_k)) for the tapers that do not vanish at each column.
    std::vector<std::vector<std::pair<int, double>>> taps(cols.size());
    parallel_for(cols.size(), [&](std::size_t c) {
        const std::size_t k = cols[c];
        ColumnTable& t = tables[c];
        t.h = h;
        t.a0 = -R - 3.0 * h;
        t.v.assign(na, cplx(0.0));
        for (std::size_t i = 0; i < na; ++i) {
            const double a = t.a0 + h * double(i);
            cplx acc = 0.0;
            for (std::size_t j = 0; j < phi.ns; ++j)
                acc += w[j] * phi.at(j, k) * std::polar(1.0, (phi.s(j) - lambda) * a);
            t.v[i] = acc;
        }
        for (int m = 0; m < N1; ++m) {
            const double tau = direction_taper(fam.grid, m, phi.theta(k));
            if (tau != 0.0) taps[c].push_back({m, tau});
        }
    });

    // Per-direction fields F_m = F^{-1}(phi~ tau_m) at points where chi > 0.
    std::vector<double> chis(P);
    std::vector<cplx> fields(std::size_t(N1) * P, cplx(0.0));
    parallel_for(P, [&](std::size_t idx) {
        const H2Point z = samples.point(idx);
        chis[idx] = chi(z);
        if (chis[idx] == 0.0) return;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double a = boundary_height(z, phi.theta(cols[c]));
            const cplx v = std::polar(std::exp(0.5 * a), lambda * a) * tables[c](a);
            for (const auto& [m, tau] : taps[c]) fields[std::size_t(m) * P + idx] += tau * v;
        }
    });

    fam.target.assign(P, cplx(0.0));
    for (std::size_t idx = 0; idx < P; ++idx) {
        if (chis[idx] == 0.0) continue;
        cplx acc = 0.0;
        for (int m = 0; m < N1; ++m) acc += fields[std::size_t(m) * P + idx];
        fam.target[idx] = chis[idx] * acc;
    }
    fam.target_norm2 = fam.dense_norm2(fam.target);

    const double reach = 2.0 + 4.0 / (3.0 * N2);
    fam.beams.resize(std::size_t(N1) * std::size_t(N2 + 1));
    std::vector<int> off_grid(std::size_t(N1), 0);
    parallel_for(std::size_t(N1), [&](std::size_t mu) {
        const int m = int(mu);
        for (int n = 0; n <= N2; ++n) {
            SparseBeam& b = fam.beams[mu * std::size_t(N2 + 1) + std::size_t(n)];
            b.m = m;
            b.n = n;
        }
        for (std::size_t idx = 0; idx < P; ++idx) {
            if (chis[idx] == 0.0) continue;
            const cplx f = chis[idx] * fields[mu * P + idx];
            const double x = beam_offset_coordinate(fam.grid, m, samples.point(idx));
            if (std::abs(x) > reach) off_grid[mu] = 1;
            const double u = double(N2) * x / 4.0 + 0.5 * double(N2);
            const int lo = std::max(0, int(std::ceil(u - 2.0 / 3.0)));
            const int hi = std::min(N2, int(std::floor(u + 2.0 / 3.0)));
            for (int n = lo; n <= hi; ++n) {
                const double e = offset_bump(fam.grid, n, x);
                if (e == 0.0) continue;
                SparseBeam& b = fam.beams[mu * std::size_t(N2 + 1) + std::size_t(n)];
                b.index.push_back(std::uint32_t(idx));
                b.values.push_back(e * f);
            }
        }
    });
    if (std::any_of(off_grid.begin(), off_grid.end(), [](int v) { return v != 0; }))
        throw DomainError("beam_decompose: rotated cutoff support leaves the offset range [-2, 2]");
    return fam;
}

BeamClassification classify_beams(const BeamFamily& family, double delta, double C) {
    if (!(delta > 0.0)) throw DomainError("classify_beams: delta must be positive");
    const double realized = family.square_sum_constant();
    if (C < realized * (1.0 - 1e-12)) throw DomainError("classify_beams: C is below the realized square-sum constant");
    BeamClassification out;
    const double threshold = delta * C * family.target_norm2;
    for (std::size_t i = 0; i < family.beams.size(); ++i)
        (family.norm2(family.beams[i]) >= threshold ? out.large : out.small).push_back(i);
    if (double(out.large.size()) > 1.0 / delta)
        throw AccuracyError("classify_beams: more than 1/delta large beams", double(out.large.size()) * delta);
    return out;
}

BeamRatioReport beam_l1_l2(const BeamFamily& family) {
    BeamRatioReport r;
    r.ratios.resize(family.beams.size());
    for (std::size_t i = 0; i < family.beams.size(); ++i) {
        const double n2 = family.norm2(family.beams[i]);
        r.ratios[i] = n2 > 0.0 ? family.norm1(family.beams[i]) / std::sqrt(n2) : 0.0;
        r.max_ratio = std::max(r.max_ratio, r.ratios[i]);
    }
    r.scale = std::pow(family.grid.lambda, -0.25) * std::pow(family.grid.beta, 0.25);
    r.constant = r.max_ratio / r.scale;
    return r;
}

double cross_term_constant(const BeamFamily& family, const std::vector<std::size_t>& subset) {
    if (!(family.target_norm2 > 0.0)) return 0.0;
    std::vector<double> t(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) t[i] = family.norm2(family.beams.at(subset[i]));
    const double diag = pairwise_sum(t.data(), t.size());
    return std::abs(family.dense_norm2(family.sum(subset)) - diag) / family.target_norm2;
}

BeamLeakage beam_leakage(const BeamFamily& family, int m, int n, std::size_t nb, double ds) {
    if (nb < 8 || !(ds > 0.0)) throw DomainError("beam_leakage: need nb >= 8 and ds > 0");
    const SparseBeam& b = family.beam(m, n);
    const double lambda = family.grid.lambda;
    const double s_lo = 0.5 * lambda;
    const std::size_t ns = std::size_t(std::floor(lambda / ds)) + 1;
    const double width = 4.0 / 3.0 * 2.0 * kPi / double(family.grid.N1);
    const double center = family.grid.directions[std::size_t(m)].center;
    const auto& cal = plancherel(Space::H2);
    std::vector<double> tot(nb), out(nb);
    parallel_for(nb, [&](std::size_t k) {
        const double theta = 2.0 * kPi * double(k) / double(nb);
        std::vector<cplx> coeff(ns, cplx(0.0));
        for (std::size_t i = 0; i < b.index.size(); ++i) {
            const double a = boundary_height(family.samples.point(b.index[i]), theta);
            const cplx base = family.samples.weight(b.index[i]) * b.values[i] * std::polar(std::exp(0.5 * a), -s_lo * a);
            const cplx step = std::polar(1.0, -ds * a);
            cplx e = base;
            for (std::size_t j = 0; j < ns; ++j) {
                coeff[j] += e;
                e *= step;
            }
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < ns; ++j) {
            const double s = s_lo + ds * double(j);
            const double wj = (j == 0 || j + 1 == ns) ? 0.5 * ds : ds;
            acc += wj * cal.constant / (2.0 * kPi) * plancherel_weight(Space::H2, s) * std::norm(coeff[j]);
        }
        const double cut = 1.0 - smooth_plateau(wrap_angle(theta - center), width, 2.0 * width);
        tot[k] = acc / double(nb);
        out[k] = tot[k] * cut * cut;
    });
    BeamLeakage r;
    r.total = pairwise_sum(tot.data(), nb);
    r.outside = pairwise_sum(out.data(), nb);
    r.spatial = family.norm2(b);
    return r;
}

void save_beam_family(const BeamFamily& f, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ResourceError("cannot create " + dir + ": " + ec.message());
    const H2Grid& g = f.samples;
    nlohmann::json j = {
        {"lambda", f.grid.lambda}, {"beta", f.grid.beta}, {"eps1", f.grid.eps1}, {"N1", f.grid.N1},
        {"N2", f.grid.N2}, {"band", {f.band_lo, f.band_hi}}, {"chi", {{"inner", f.chi.inner}, {"outer", f.chi.outer}}},
        {"samples", {{"x0", g.x0}, {"dx", g.dx}, {"nx", g.nx}, {"t0", g.t0}, {"dt", g.dt}, {"nt", g.nt}}},
        {"target_norm2", f.target_norm2}, {"spectral_norm2", f.spectral_norm2},
        {"square_sum_constant", f.square_sum_constant()}, {"beams", f.beams.size()}};
    std::ofstream js(fs::path(dir) / "grid.json");
    js << j.dump(2) << "\n";
    if (!js) throw ResourceError("write failed for grid.json");
    for (const SparseBeam& b : f.beams) {
        const fs::path p = fs::path(dir) / ("beam_" + std::to_string(b.m) + "_" + std::to_string(b.n) + ".bin");
        std::ofstream out(p, std::ios::binary);
        if (!out) throw ResourceError("cannot open " + p.string());
        const nlohmann::json h = {{"m", b.m}, {"n", b.n}, {"count", b.index.size()}, {"endianness", "little"},
                                  {"index", "uint32"}, {"dtype", "complex128"}};
        const std::string text = h.dump();
        const std::uint64_t len = text.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(text.data(), std::streamsize(len));
        out.write(reinterpret_cast<const char*>(b.index.data()), std::streamsize(b.index.size() * 4));
        out.write(reinterpret_cast<const char*>(b.values.data()), std::streamsize(b.values.size() * sizeof(cplx)));
        if (!out) throw ResourceError("write failed for " + p.string());
    }
}

BeamFamily load_beam_family(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream js(fs::path(dir) / "grid.json");
    if (!js) throw ResourceError("cannot open " + dir + "/grid.json");
    const auto j = nlohmann::json::parse(js);
    BeamFamily f;
    f.grid = build_beam_grid(j.at("lambda"), j.at("beta"), j.at("eps1"));
    if (f.grid.N1 != j.at("N1").get<int>() || f.grid.N2 != j.at("N2").get<int>())
        throw DomainError("load_beam_family: grid sizes do not match the parameters");
    f.band_lo = j.at("band")[0];
    f.band_hi = j.at("band")[1];
    f.chi.inner = j.at("chi").at("inner");
    f.chi.outer = j.at("chi").at("outer");
    const auto& s = j.at("samples");
    f.samples = H2Grid{s.at("x0"), s.at("dx"), s.at("nx"), s.at("t0"), s.at("dt"), s.at("nt")};
    f.target_norm2 = j.at("target_norm2");
    f.spectral_norm2 = j.at("spectral_norm2");
    for (int m = 0; m < f.grid.N1; ++m)
        for (int n = 0; n <= f.grid.N2; ++n) {
            const fs::path p = fs::path(dir) / ("beam_" + std::to_string(m) + "_" + std::to_string(n) + ".bin");
            std::ifstream in(p, std::ios::binary);
            if (!in) throw ResourceError("cannot open " + p.string());
            std::uint64_t len = 0;
            in.read(reinterpret_cast<char*>(&len), sizeof(len));
            if (!in || len > (1u << 20)) throw DomainError(p.string() + ": bad header length");
            std::string text(len, '\0');
            in.read(text.data(), std::streamsize(len));
            const auto h = nlohmann::json::parse(text);
            if (h.at("m").get<int>() != m || h.at("n").get<int>() != n || h.value("dtype", "") != "complex128")
                throw DomainError(p.string() + ": unexpected header");
            SparseBeam b;
            b.m = m;
            b.n = n;
            const std::size_t count = h.at("count");
            b.index.resize(count);
            b.values.resize(count);
            in.read(reinterpret_cast<char*>(b.index.data()), std::streamsize(count * 4));
            in.read(reinterpret_cast<char*>(b.values.data()), std::streamsize(count * sizeof(cplx)));
            if (!in) throw DomainError(p.string() + ": truncated payload");
            for (std::uint32_t i : b.index)
                if (i >= f.samples.size()) throw DomainError(p.string() + ": index outside the grid");
            f.beams.push_back(std::move(b));
        }
    f.target = f.sum_all();
    return f;
}

}  // namespace hyperlap
