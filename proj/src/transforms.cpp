#include "hyperlap/transforms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "hyperlap/errors.hpp"

namespace hyperlap {

static_assert(std::endian::native == std::endian::little, "binary container assumes a little-endian host");

namespace {

std::vector<double> grid_ts(double t_max, double step) {
    if (!(step > 0.0) || !(t_max > 0.0)) throw DomainError("radial grid: step and t_max must be positive");
    const auto n = std::size_t(std::llround(t_max / step));
    std::vector<double> ts(n + 1);
    for (std::size_t j = 0; j <= n; ++j) ts[j] = step * double(j);
    return ts;
}

double sinh_power(Space space, double t) {
    const double sh = std::sinh(t);
    return space == Space::H2 ? sh : sh * sh;
}

// Spherical function of the given space on the whole t-grid for real s.
std::vector<double> spherical_profile(Space space, double s, const std::vector<double>& ts) {
    if (space == Space::H2) return spherical_h2_profile(s, ts);
    std::vector<double> out(ts.size());
    for (std::size_t j = 0; j < ts.size(); ++j) out[j] = spherical_h3_closed(s, ts[j]);
    return out;
}

// Polar transforms of several profiles at one s. On H2 the integrand is odd in t, so the trapezoid
// rule needs the endpoint corrections (h^2/12) g'(0) - (h^4/720) g'''(0); on H3 it is even and the
// plain trapezoid rule is spectrally accurate.
void forward_at(Space space, const std::vector<const RadialFunction*>& fs, double s, const std::vector<double>& ts,
                double* out) {
    const auto prof = spherical_profile(space, s, ts);
    const double h = fs.front()->step;
    for (std::size_t m = 0; m < fs.size(); ++m) {
        const auto& f = fs[m]->samples;
        double sum = 0.0;
        for (std::size_t j = 1; j + 1 < f.size(); ++j) sum += f[j] * prof[j] * sinh_power(space, ts[j]);
        const std::size_t last = f.size() - 1;
        sum += 0.5 * f[last] * prof[last] * sinh_power(space, ts[last]);
        sum *= h;
        if (space == Space::H2) {
            const double f0 = f[0];
            const double f2 = f.size() > 1 ? 2.0 * (f[1] - f[0]) / (h * h) : 0.0;
            const double g3 = 3.0 * (f2 - f0 * (s * s + 0.25) / 2.0) + f0;
            sum += h * h / 12.0 * f0 - std::pow(h, 4) / 720.0 * g3;
        }
        out[m] = sum;
    }
}

std::vector<std::vector<double>> forward_many(Space space, const std::vector<const RadialFunction*>& fs,
                                              const std::vector<double>& svals) {
    const auto ts = grid_ts(fs.front()->t_max, fs.front()->step);
    for (auto* f : fs)
        if (f->samples.size() != ts.size()) throw DomainError("hc_transform: inconsistent radial grids");
    std::vector<double> flat(svals.size() * fs.size());
    parallel_for(svals.size(), [&](std::size_t i) { forward_at(space, fs, svals[i], ts, &flat[i * fs.size()]); });
    std::vector<std::vector<double>> out(fs.size(), std::vector<double>(svals.size()));
    for (std::size_t i = 0; i < svals.size(); ++i)
        for (std::size_t m = 0; m < fs.size(); ++m) out[m][i] = flat[i * fs.size() + m];
    return out;
}

// Trapezoid weights on the s grid, half weight at s = 0 and at the last node.
double s_weight(const SpectralFunction& sp, std::size_t j) {
    double w = sp.ds;
    if (j == 0 || j + 1 == sp.ns) w *= 0.5;
    return w;
}

std::vector<std::vector<double>> inverse_many(Space space, const std::vector<std::vector<double>>& specs, double s0,
                                              double ds, double constant, double t_max, double step) {
    const auto ts = grid_ts(t_max, step);
    const std::size_t ns = specs.front().size();
    constexpr std::size_t kChunks = 16;
    std::vector<std::vector<double>> partial(kChunks, std::vector<double>(specs.size() * ts.size(), 0.0));
    parallel_for(kChunks, [&](std::size_t c) {
        auto& acc = partial[c];
        for (std::size_t j = c; j < ns; j += kChunks) {
            const double s = s0 + ds * double(j);
            double w = ds * plancherel_weight(space, s) * constant;
            if (j == 0 || j + 1 == ns) w *= 0.5;
            bool any = false;
            for (auto& sp : specs) any = any || sp[j] != 0.0;
            if (!any || w == 0.0) continue;
            const auto prof = spherical_profile(space, s, ts);
            for (std::size_t m = 0; m < specs.size(); ++m) {
                const double a = w * specs[m][j];
                double* dst = &acc[m * ts.size()];
                for (std::size_t i = 0; i < ts.size(); ++i) dst[i] += a * prof[i];
            }
        }
    });
    std::vector<std::vector<double>> out(specs.size(), std::vector<double>(ts.size(), 0.0));
    for (std::size_t m = 0; m < specs.size(); ++m)
        for (std::size_t i = 0; i < ts.size(); ++i) {
            double sum = 0.0;
            for (std::size_t c = 0; c < kChunks; ++c) sum += partial[c][m * ts.size() + i];
            out[m][i] = sum;
        }
    return out;
}

// Weighted L2 norm squared on the radial grid (sinh^{d-1} measure, trapezoid).
double radial_norm2(Space space, const std::vector<double>& f, double step) {
    double sum = 0.0;
    for (std::size_t j = 1; j < f.size(); ++j) {
        const double w = (j + 1 == f.size()) ? 0.5 : 1.0;
        sum += w * f[j] * f[j] * sinh_power(space, step * double(j));
    }
    return sum * step;
}

const char* space_name(Space s) { return s == Space::H2 ? "H2" : "H3"; }

Space parse_space(const std::string& s) {
    if (s == "H2") return Space::H2;
    if (s == "H3") return Space::H3;
    throw DomainError("unknown space tag: " + s);
}

void write_container(const std::string& path, const nlohmann::json& header, const std::vector<double>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot open " + path + " for writing");
    const std::string text = header.dump();
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), std::streamsize(text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size() * sizeof(double)));
    if (!out) throw ResourceError("write failed for " + path);
}

nlohmann::json read_container(const std::string& path, std::vector<double>* payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len > (1u << 24)) throw DomainError(path + ": bad header length");
    std::string text(len, '\0');
    in.read(text.data(), std::streamsize(len));
    auto header = nlohmann::json::parse(text);
    if (header.value("endianness", "") != "little" || header.value("dtype", "") != "float64")
        throw DomainError(path + ": unsupported encoding");
    const std::size_t count = header.at("count").get<std::size_t>();
    payload->resize(count);
    in.read(reinterpret_cast<char*>(payload->data()), std::streamsize(count * sizeof(double)));
    if (!in) throw DomainError(path + ": truncated payload");
    return header;
}

}  // namespace

RadialFunction RadialFunction::sample(Space space, double t_max, double step, const std::function<double(double)>& f) {
    RadialFunction r;
    r.space = space;
    r.step = step;
    const auto ts = grid_ts(t_max, step);
    r.t_max = ts.back();
    r.samples.resize(ts.size());
    for (std::size_t j = 0; j < ts.size(); ++j) r.samples[j] = f(ts[j]);
    return r;
}

double RadialFunction::operator()(double t) const {
    t = std::abs(t);
    if (t > t_max + 1e-12 || samples.empty()) return 0.0;
    const long n = long(samples.size()) - 1;
    long j = std::min(long(std::floor(t / step)), n - 1);
    j = std::max(j, 0L);
    const double u = t / step - double(j);
    auto at = [&](long k) {
        k = std::abs(k);
        return k > n ? 0.0 : samples[std::size_t(k)];
    };
    const double fm = at(j - 1), f0 = at(j), f1 = at(j + 1), f2 = at(j + 2);
    return -u * (u - 1.0) * (u - 2.0) / 6.0 * fm + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * f0 -
           (u + 1.0) * u * (u - 2.0) / 2.0 * f1 + (u + 1.0) * u * (u - 1.0) / 6.0 * f2;
}

SpectralFunction SpectralFunction::zeros(Space space, double s0, double ds, std::size_t ns, std::size_t nb) {
    if (!(ds > 0.0) || ns == 0 || nb == 0) throw DomainError("SpectralFunction: empty grid");
    SpectralFunction f;
    f.space = space;
    f.s0 = s0;
    f.ds = ds;
    f.ns = ns;
    f.nb = nb;
    f.band_lo = s0;
    f.band_hi = s0 + ds * double(ns - 1);
    f.values.assign(ns * nb, cplx(0.0));
    return f;
}

double plancherel_weight(Space space, double s) {
    s = std::abs(s);
    return space == Space::H2 ? s * std::tanh(kPi * s) : s * s;
}

cplx hc_transform(const RadialFunction& f, double s) { return hc_transform(f, std::vector<double>{s}).front(); }

std::vector<double> hc_transform(const RadialFunction& f, const std::vector<double>& s) {
    return forward_many(f.space, {&f}, s).front();
}

RadialFunction hc_inverse(const SpectralFunction& spec, const PlancherelCalibration& cal, double t_max, double step) {
    if (spec.nb != 1) throw DomainError("hc_inverse: spectrum must be radial (nb == 1)");
    if (spec.s0 != 0.0) throw DomainError("hc_inverse: spectrum grid must start at s = 0");
    if (cal.space != spec.space) throw DomainError("hc_inverse: calibration belongs to another space");
    std::vector<double> re(spec.ns);
    for (std::size_t j = 0; j < spec.ns; ++j) re[j] = spec.values[j].real();
    RadialFunction out;
    out.space = spec.space;
    out.step = step;
    out.samples = inverse_many(spec.space, {re}, spec.s0, spec.ds, cal.constant, t_max, step).front();
    out.t_max = step * double(out.samples.size() - 1);
    return out;
}

PlancherelCalibration calibrate_plancherel(Space space, double t_max, double step, double s_max, double ds) {
    struct Bump {
        double center, width;
    };
    const Bump bumps[5] = {{0.0, 0.4}, {0.5, 0.3}, {1.0, 0.35}, {1.5, 0.4}, {2.0, 0.45}};
    std::vector<RadialFunction> fs;
    for (const auto& b : bumps)
        fs.push_back(RadialFunction::sample(space, t_max, step, [b](double t) {
            const double u = (t - b.center) / b.width, v = (t + b.center) / b.width;
            return std::exp(-u * u) + std::exp(-v * v);
        }));
    const auto ns = std::size_t(std::llround(s_max / ds)) + 1;
    std::vector<double> svals(ns);
    for (std::size_t j = 0; j < ns; ++j) svals[j] = ds * double(j);
    std::vector<const RadialFunction*> ptrs;
    for (auto& f : fs) ptrs.push_back(&f);
    const auto spectra = forward_many(space, ptrs, svals);
    const auto back = inverse_many(space, spectra, 0.0, ds, 1.0, t_max, step);

    double num = 0.0, den = 0.0, ref = 0.0;
    for (std::size_t m = 0; m < fs.size(); ++m) {
        for (std::size_t j = 1; j < back[m].size(); ++j) {
            const double w = sinh_power(space, step * double(j)) * ((j + 1 == back[m].size()) ? 0.5 : 1.0);
            num += w * back[m][j] * fs[m].samples[j];
            den += w * back[m][j] * back[m][j];
        }
        ref += radial_norm2(space, fs[m].samples, step);
    }
    PlancherelCalibration cal;
    cal.space = space;
    cal.constant = num / den;
    cal.t_max = t_max;
    cal.step = step;
    cal.s_max = s_max;
    cal.ds = ds;
    double res = 0.0;
    for (std::size_t m = 0; m < fs.size(); ++m) {
        std::vector<double> diff(back[m].size());
        for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = cal.constant * back[m][j] - fs[m].samples[j];
        res += radial_norm2(space, diff, step);
    }
    cal.residual = std::sqrt(res / ref);
    return cal;
}

const PlancherelCalibration& plancherel(Space space) {
    static std::mutex mu;
    static PlancherelCalibration cached[2];
    static bool ready[2] = {false, false};
    std::lock_guard<std::mutex> lock(mu);
    const int idx = space == Space::H2 ? 0 : 1;
    if (ready[idx]) return cached[idx];

    const PlancherelCalibration defaults;
    const char* path = std::getenv("HYPERLAP_CACHE");
    nlohmann::json cache = nlohmann::json::object();
    if (path && *path) {
        std::ifstream in(path);
        if (in) {
            try {
                cache = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception&) {
                cache = nlohmann::json::object();
            }
        }
        const char* key = space_name(space);
        if (cache.contains(key)) {
            const auto& e = cache[key];
            if (e.value("t_max", 0.0) == defaults.t_max && e.value("step", 0.0) == defaults.step &&
                e.value("s_max", 0.0) == defaults.s_max && e.value("ds", 0.0) == defaults.ds) {
                PlancherelCalibration c = defaults;
                c.space = space;
                c.constant = e.at("constant").get<double>();
                c.residual = e.at("residual").get<double>();
                cached[idx] = c;
                ready[idx] = true;
                return cached[idx];
            }
        }
    }
    cached[idx] = calibrate_plancherel(space, defaults.t_max, defaults.step, defaults.s_max, defaults.ds);
    ready[idx] = true;
    if (path && *path) {
        const auto& c = cached[idx];
        cache[space_name(space)] = {{"constant", c.constant}, {"residual", c.residual}, {"t_max", c.t_max},
                                    {"step", c.step},         {"s_max", c.s_max},       {"ds", c.ds}};
        std::ofstream out(path);
        if (out) out << cache.dump(2) << "\n";
    }
    return cached[idx];
}

H2Point H2Grid::point(std::size_t idx) const {
    const std::size_t i = idx / nt, j = idx % nt;
    return H2Point{x0 + dx * double(i), std::exp(t0 + dt * double(j))};
}

double H2Grid::weight(std::size_t idx) const {
    const std::size_t i = idx / nt, j = idx % nt;
    double w = dx * dt * std::exp(-(t0 + dt * double(j)));
    if (i == 0 || i + 1 == nx) w *= 0.5;
    if (j == 0 || j + 1 == nt) w *= 0.5;
    return w;
}

H2Function H2Function::sample(const H2Grid& grid, const std::function<cplx(const H2Point&)>& f) {
    H2Function out{grid, std::vector<cplx>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = f(grid.point(i));
    return out;
}

cplx h2_inner(const H2Function& f1, const H2Function& f2) {
    if (f1.values.size() != f2.values.size()) throw DomainError("h2_inner: grids differ");
    cplx sum = 0.0;
    for (std::size_t i = 0; i < f1.values.size(); ++i) sum += f1.grid.weight(i) * f1.values[i] * std::conj(f2.values[i]);
    return sum;
}

double boundary_height(const H2Point& x, double theta) {
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    const double re = s * x.x + c, im = s * x.y;
    return std::log(x.y) - std::log(re * re + im * im);
}

cplx helgason_h2(const H2Function& f, double s, double theta) {
    const cplx p(0.5, -s);
    cplx sum = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (f.values[i] == 0.0) continue;
        sum += f.grid.weight(i) * f.values[i] * std::exp(p * boundary_height(f.grid.point(i), theta));
    }
    return sum;
}

SpectralFunction helgason_h2(const H2Function& f, double s0, double ds, std::size_t ns, std::size_t nb) {
    SpectralFunction out = SpectralFunction::zeros(Space::H2, s0, ds, ns, nb);
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (f.values[i] != 0.0) live.push_back(i);
    parallel_for(nb, [&](std::size_t k) {
        const double th = out.theta(k);
        std::vector<cplx> acc(ns, 0.0);
        for (std::size_t i : live) {
            const double a = boundary_height(f.grid.point(i), th);
            cplx term = f.grid.weight(i) * f.values[i] * std::exp(cplx(0.5 * a, -s0 * a));
            const cplx rot = std::polar(1.0, -ds * a);
            for (std::size_t j = 0; j < ns; ++j) {
                acc[j] += term;
                term *= rot;
            }
        }
        for (std::size_t j = 0; j < ns; ++j) out.at(j, k) = acc[j];
    });
    return out;
}

std::vector<double> helgason_synthesis_weights(const SpectralFunction& spec, const PlancherelCalibration& cal) {
    // Full-line grids (after Weyl extension) use one half of the integral over R.
    const double side = spec.s0 < 0.0 ? 0.5 : 1.0;
    std::vector<double> w(spec.ns);
    for (std::size_t j = 0; j < spec.ns; ++j)
        w[j] = side * s_weight(spec, j) * cal.constant / (2.0 * kPi) * plancherel_weight(Space::H2, spec.s(j)) /
               double(spec.nb);
    return w;
}

std::vector<cplx> helgason_inverse_h2(const SpectralFunction& spec, const std::vector<H2Point>& pts,
                                      const PlancherelCalibration& cal) {
    if (spec.space != Space::H2 || cal.space != Space::H2) throw DomainError("helgason_inverse_h2: H2 data required");
    const std::vector<double> w = helgason_synthesis_weights(spec, cal);
    std::vector<std::size_t> cols;
    for (std::size_t k = 0; k < spec.nb; ++k) {
        bool any = false;
        for (std::size_t j = 0; j < spec.ns && !any; ++j) any = spec.at(j, k) != 0.0;
        if (any) cols.push_back(k);
    }
    std::vector<cplx> out(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t p) {
        cplx total = 0.0;
        for (std::size_t k : cols) {
            const double a = boundary_height(pts[p], spec.theta(k));
            cplx e = std::exp(cplx(0.5 * a, spec.s0 * a));
            const cplx rot = std::polar(1.0, spec.ds * a);
            cplx col = 0.0;
            for (std::size_t j = 0; j < spec.ns; ++j) {
                col += w[j] * spec.at(j, k) * e;
                e *= rot;
            }
            total += col;
        }
        out[p] = total;
    });
    return out;
}

H2Function helgason_inverse_h2(const SpectralFunction& spec, const H2Grid& grid, const PlancherelCalibration& cal) {
    std::vector<H2Point> pts(grid.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = grid.point(i);
    return H2Function{grid, helgason_inverse_h2(spec, pts, cal)};
}

cplx spectral_inner(const SpectralFunction& a, const SpectralFunction& b, const PlancherelCalibration& cal) {
    if (a.ns != b.ns || a.nb != b.nb || a.s0 != b.s0 || a.ds != b.ds) throw DomainError("spectral_inner: grids differ");
    const double density = a.space == Space::H2 ? cal.constant / (2.0 * kPi) : cal.constant / (4.0 * kPi);
    const double side = a.s0 < 0.0 ? 0.5 : 1.0;
    cplx sum = 0.0;
    for (std::size_t j = 0; j < a.ns; ++j) {
        cplx row = 0.0;
        for (std::size_t k = 0; k < a.nb; ++k) row += a.at(j, k) * std::conj(b.at(j, k));
        sum += side * s_weight(a, j) * density * plancherel_weight(a.space, a.s(j)) * row / double(a.nb);
    }
    return sum;
}

H3Point H3Grid::point(std::size_t idx) const {
    const std::size_t i1 = idx / (nx * nt), i2 = (idx / nt) % nx, j = idx % nt;
    return H3Point{cplx(x0 + dx * double(i1), x0 + dx * double(i2)), std::exp(t0 + dt * double(j))};
}

double H3Grid::weight(std::size_t idx) const {
    const std::size_t i1 = idx / (nx * nt), i2 = (idx / nt) % nx, j = idx % nt;
    double w = dx * dx * dt * std::exp(-2.0 * (t0 + dt * double(j)));
    if (i1 == 0 || i1 + 1 == nx) w *= 0.5;
    if (i2 == 0 || i2 + 1 == nx) w *= 0.5;
    if (j == 0 || j + 1 == nt) w *= 0.5;
    return w;
}

H3Function H3Function::sample(const H3Grid& grid, const std::function<cplx(const H3Point&)>& f) {
    H3Function out{grid, std::vector<cplx>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = f(grid.point(i));
    return out;
}

double boundary_height_h3(const H3Point& x, const GroupElement& k) {
    const GroupElement inv = k.inverse();
    const double den = std::norm(inv.c * x.z + inv.d) + std::norm(inv.c) * x.height * x.height;
    return std::log(x.height) - std::log(den);
}

cplx helgason_h3(const H3Function& f, double s, const GroupElement& k) {
    const cplx p(1.0, -s);
    std::vector<cplx> part(f.grid.nx, 0.0);
    const std::size_t slab = f.grid.nx * f.grid.nt;
    parallel_for(f.grid.nx, [&](std::size_t i1) {
        cplx sum = 0.0;
        for (std::size_t r = 0; r < slab; ++r) {
            const std::size_t i = i1 * slab + r;
            if (f.values[i] == 0.0) continue;
            sum += f.grid.weight(i) * f.values[i] * std::exp(p * boundary_height_h3(f.grid.point(i), k));
        }
        part[i1] = sum;
    });
    cplx total = 0.0;
    for (const auto& v : part) total += v;
    return total;
}

double pw_profile(double x, double eps) {
    const double y = 0.25 * eps * x;
    if (std::abs(y) < 1e-4) {
        const double y2 = y * y;
        const double sinc = 1.0 - y2 / 6.0 + y2 * y2 / 120.0;
        return std::pow(sinc, 4);
    }
    return std::pow(std::sin(y) / y, 4);
}

double pw_spectral(double s, double lambda, double eps) {
    const double h = pw_profile(s - lambda, eps) + pw_profile(-s - lambda, eps);
    return h * h;
}

double PwKernel::operator()(double t) const {
    t = std::abs(t);
    const auto& nodes = spectrum_nodes;
    const auto& wts = spectrum_weights;
    double sum = 0.0;
    if (t < 1e-12) {
        for (std::size_t i = 0; i < nodes.size(); ++i) sum += wts[i] * nodes[i] * nodes[i];
        return constant * sum;
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += wts[i] * nodes[i] * std::sin(nodes[i] * t);
    return constant * sum / std::sinh(t);
}

double PwKernel::support_radius(double tol) const {
    const double peak = std::abs(kernel.samples.front());
    for (std::size_t j = kernel.size(); j-- > 0;)
        if (std::abs(kernel.samples[j]) > tol * peak) return kernel.t(j);
    return 0.0;
}

PwKernel build_pw_kernel(double lambda, double eps, double t_max, double step) {
    if (!(lambda > 0.0) || !(eps > 0.0)) throw DomainError("build_pw_kernel: lambda and eps must be positive");
    PwKernel k;
    k.lambda = lambda;
    k.eps = eps;
    k.constant = plancherel(Space::H3).constant;
    // h_lambda decays like (4/(eps x))^8; beyond 100/eps from the peak it is below 1e-16.
    const double half = 100.0 / eps;
    const double lo = std::max(0.0, lambda - half), hi = lambda + half;
    const auto& rule = gauss20();
    const auto panels = std::size_t(std::ceil(hi - lo));
    const double width = (hi - lo) / double(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double a = lo + width * double(p);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double s = a + 0.5 * width * (rule.nodes[i] + 1.0);
            k.spectrum_nodes.push_back(s);
            k.spectrum_weights.push_back(0.5 * width * rule.weights[i] * pw_spectral(s, lambda, eps));
        }
    }
    const double sds = 0.05;
    const auto ns = std::size_t(std::ceil(hi / sds)) + 1;
    k.spectrum = SpectralFunction::zeros(Space::H3, 0.0, sds, ns, 1);
    for (std::size_t j = 0; j < ns; ++j) k.spectrum.values[j] = pw_spectral(k.spectrum.s(j), lambda, eps);
    k.spectrum.band_lo = lo;
    k.spectrum.band_hi = hi;
    const auto ts = grid_ts(t_max, step);
    k.kernel.space = Space::H3;
    k.kernel.step = step;
    k.kernel.t_max = ts.back();
    k.kernel.samples.resize(ts.size());
    parallel_for(ts.size(), [&](std::size_t j) { k.kernel.samples[j] = k(ts[j]); });
    return k;
}

namespace {

int mode_of(std::size_t idx, std::size_t nb) {
    const long n = long(idx);
    return int(n < long((nb + 1) / 2) ? n : n - long(nb));
}

std::vector<cplx> boundary_modes(const SpectralFunction& phi, std::size_t j) {
    std::vector<cplx> modes(phi.nb, 0.0);
    for (std::size_t m = 0; m < phi.nb; ++m) {
        const int n = mode_of(m, phi.nb);
        cplx sum = 0.0;
        for (std::size_t k = 0; k < phi.nb; ++k) sum += phi.at(j, k) * std::polar(1.0, -double(n) * phi.theta(k));
        modes[m] = sum / double(phi.nb);
    }
    return modes;
}

}  // namespace

SpectralFunction weyl_extend(const SpectralFunction& phi) {
    if (!(phi.band_lo > 0.0)) throw DomainError("weyl_extend: declared band must be bounded away from 0");
    if (phi.s0 < 0.0) throw DomainError("weyl_extend: input grid must lie in s >= 0");
    const double offset = phi.s0 / phi.ds;
    const auto m0 = std::size_t(std::llround(offset));
    if (std::abs(offset - double(m0)) > 1e-9) throw DomainError("weyl_extend: s0 must be a multiple of ds");
    double total = 0.0, below = 0.0;
    for (std::size_t j = 0; j < phi.ns; ++j)
        for (std::size_t k = 0; k < phi.nb; ++k) {
            const double e = std::norm(phi.at(j, k));
            total += e;
            if (phi.s(j) < phi.band_lo) below += e;
        }
    if (below > 1e-16 * total) throw DomainError("weyl_extend: input carries mass below the declared band");

    const std::size_t top = m0 + phi.ns - 1;  // index of s_max on the uniform grid from 0
    SpectralFunction out = SpectralFunction::zeros(phi.space, -phi.ds * double(top), phi.ds, 2 * top + 1, phi.nb);
    out.band_lo = -phi.band_hi;
    out.band_hi = phi.band_hi;
    for (std::size_t j = 0; j < phi.ns; ++j) {
        const double s = phi.s(j);
        if (s < phi.band_lo) continue;
        const std::size_t pos = top + m0 + j, neg = top - (m0 + j);
        for (std::size_t k = 0; k < phi.nb; ++k) out.at(pos, k) = phi.at(j, k);
        const auto modes = boundary_modes(phi, j);
        for (std::size_t k = 0; k < phi.nb; ++k) {
            cplx sum = 0.0;
            for (std::size_t m = 0; m < phi.nb; ++m) {
                const int n = mode_of(m, phi.nb);
                sum += modes[m] / gamma_n(n, s) * std::polar(1.0, double(n) * phi.theta(k));
            }
            out.at(neg, k) = sum;
        }
    }
    return out;
}

cplx boundary_interpolate(const SpectralFunction& phi, std::size_t j, double theta) {
    const auto modes = boundary_modes(phi, j);
    cplx sum = 0.0;
    for (std::size_t m = 0; m < phi.nb; ++m) {
        const int n = mode_of(m, phi.nb);
        if (phi.nb % 2 == 0 && n == -int(phi.nb / 2))
            sum += modes[m] * std::cos(double(n) * theta);
        else
            sum += modes[m] * std::polar(1.0, double(n) * theta);
    }
    return sum;
}

std::pair<SpectralFunction, SpectralFunction> project_band(const SpectralFunction& phi, double lo, double hi) {
    SpectralFunction in = phi, out = phi;
    for (std::size_t j = 0; j < phi.ns; ++j) {
        const double a = std::abs(phi.s(j));
        const bool inside = a >= lo && a <= hi;
        for (std::size_t k = 0; k < phi.nb; ++k) (inside ? out : in).at(j, k) = 0.0;
    }
    in.band_lo = std::max(phi.band_lo, lo);
    in.band_hi = std::min(phi.band_hi, hi);
    if (in.band_lo > in.band_hi) in.band_lo = in.band_hi = lo;
    return {in, out};
}

double taper_tau1(double s, double lambda, double beta) {
    const double d = std::abs(std::abs(s) - lambda);
    const double inner = 0.25 * beta, outer = 0.5 * beta;
    if (d <= inner) return 1.0;
    if (d >= outer) return 0.0;
    const double c = std::cos(0.5 * kPi * (d - inner) / (outer - inner));
    return c * c;
}

void save_binary(const std::string& path, const RadialFunction& f) {
    nlohmann::json h = {{"kind", "radial"},       {"space", space_name(f.space)}, {"step", f.step},
                        {"t_max", f.t_max},       {"endianness", "little"},       {"dtype", "float64"},
                        {"count", f.samples.size()}};
    write_container(path, h, f.samples);
}

void save_binary(const std::string& path, const SpectralFunction& f) {
    std::vector<double> flat;
    flat.reserve(2 * f.values.size());
    for (const auto& v : f.values) {
        flat.push_back(v.real());
        flat.push_back(v.imag());
    }
    nlohmann::json h = {{"kind", "spectral"}, {"space", space_name(f.space)}, {"s0", f.s0}, {"ds", f.ds},
                        {"ns", f.ns},         {"nb", f.nb},                   {"band", {f.band_lo, f.band_hi}},
                        {"endianness", "little"}, {"dtype", "float64"},       {"count", flat.size()}};
    write_container(path, h, flat);
}

RadialFunction load_radial(const std::string& path) {
    std::vector<double> payload;
    const auto h = read_container(path, &payload);
    if (h.value("kind", "") != "radial") throw DomainError(path + ": not a radial function");
    RadialFunction f;
    f.space = parse_space(h.at("space").get<std::string>());
    f.step = h.at("step").get<double>();
    f.t_max = h.at("t_max").get<double>();
    f.samples = std::move(payload);
    return f;
}

SpectralFunction load_spectral(const std::string& path) {
    std::vector<double> payload;
    const auto h = read_container(path, &payload);
    if (h.value("kind", "") != "spectral") throw DomainError(path + ": not a spectral function");
    SpectralFunction f;
    f.space = parse_space(h.at("space").get<std::string>());
    f.s0 = h.at("s0").get<double>();
    f.ds = h.at("ds").get<double>();
    f.ns = h.at("ns").get<std::size_t>();
    f.nb = h.at("nb").get<std::size_t>();
    f.band_lo = h.at("band")[0].get<double>();
    f.band_hi = h.at("band")[1].get<double>();
    if (payload.size() != 2 * f.ns * f.nb) throw DomainError(path + ": payload size mismatch");
    f.values.resize(f.ns * f.nb);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = cplx(payload[2 * i], payload[2 * i + 1]);
    return f;
}

}  // namespace hyperlap
