#include "hyperlap/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "hyperlap/beams.hpp"
#include "hyperlap/errors.hpp"
#include "hyperlap/geometry_tubes.hpp"
#include "hyperlap/hecke_amplifier.hpp"
#include "hyperlap/oscillatory.hpp"
#include "hyperlap/special_functions.hpp"
#include "hyperlap/svg.hpp"
#include "hyperlap/transforms.hpp"

namespace hyperlap::cli {

using nlohmann::json;

namespace {

constexpr int kConfigVersion = 1;
constexpr std::uint64_t kDefaultSeed = 1;

// Typed, range-checked access to a config object; records every value read, defaults included.
class Params {
public:
    explicit Params(const json& config) : config_(config) {
        if (!config_.is_object()) throw DomainError("config must be a JSON object");
    }

    double number(const std::string& key, double def, double lo, double hi) {
        const double v = fetch(key, json(def), [](const json& j) { return j.is_number(); }, "a number").get<double>();
        check_range(key, v, lo, hi);
        resolved_[key] = v;
        return v;
    }

    int integer(const std::string& key, int def, int lo, int hi) {
        const json& j = fetch(key, json(def), [](const json& x) { return x.is_number_integer(); }, "an integer");
        const long long v = j.get<long long>();
        check_range(key, double(v), lo, hi);
        resolved_[key] = v;
        return int(v);
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& def, double lo, double hi,
                                bool allow_empty = false) {
        const json& j = fetch(key, json(def), [](const json& x) { return x.is_array(); }, "an array of numbers");
        std::vector<double> out;
        for (const json& e : j) {
            if (!e.is_number()) throw DomainError("config key '" + key + "' must hold numbers only");
            out.push_back(e.get<double>());
            check_range(key, out.back(), lo, hi);
        }
        if (out.empty() && !allow_empty) throw DomainError("config key '" + key + "' must not be empty");
        resolved_[key] = out;
        return out;
    }

    std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
        const std::string v =
            fetch(key, json(def), [](const json& j) { return j.is_string(); }, "a string").get<std::string>();
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
            throw DomainError("config key '" + key + "' has unsupported value '" + v + "'");
        resolved_[key] = v;
        return v;
    }

    std::vector<std::string> choices(const std::string& key, const std::vector<std::string>& def,
                                     const std::vector<std::string>& allowed) {
        const json& j = fetch(key, json(def), [](const json& x) { return x.is_array(); }, "an array of strings");
        std::vector<std::string> out;
        for (const json& e : j) {
            if (!e.is_string()) throw DomainError("config key '" + key + "' must hold strings only");
            const std::string v = e.get<std::string>();
            if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
                throw DomainError("config key '" + key + "' has unsupported value '" + v + "'");
            out.push_back(v);
        }
        if (out.empty()) throw DomainError("config key '" + key + "' must not be empty");
        resolved_[key] = out;
        return out;
    }

    /** @brief Raw sub-document (arrays of objects); the caller validates it. */
    json raw(const std::string& key, const json& def) {
        const json v = config_.contains(key) ? config_.at(key) : def;
        resolved_[key] = v;
        return v;
    }

    /** @brief Rejects keys outside the allowed set (version, command and seed are always allowed). */
    void reject_unknown(const std::set<std::string>& allowed) const {
        for (const auto& [key, value] : config_.items()) {
            (void)value;
            if (key == "version" || key == "command" || key == "seed") continue;
            if (!allowed.count(key)) throw DomainError("unknown config key '" + key + "'");
        }
    }

    const json& resolved() const { return resolved_; }

private:
    const json& fetch(const std::string& key, const json& def, const std::function<bool(const json&)>& ok,
                      const char* what) {
        if (!config_.contains(key)) {
            defaults_.push_back(def);
            return defaults_.back();
        }
        const json& j = config_.at(key);
        if (!ok(j)) throw DomainError("config key '" + key + "' must be " + what);
        return j;
    }

    static void check_range(const std::string& key, double v, double lo, double hi) {
        if (!std::isfinite(v) || v < lo || v > hi) {
            std::ostringstream o;
            o << "config key '" << key << "' = " << v << " outside [" << lo << ", " << hi << "]";
            throw DomainError(o.str());
        }
    }

    const json& config_;
    std::deque<json> defaults_;
    json resolved_ = json::object();
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : width_(header.size()) { line(header); }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
        line(cells);
    }

    const std::string& text() const { return text_; }

private:
    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += '\n';
    }

    std::size_t width_;
    std::string text_;
};

json fit_json(const DecayFit& f) {
    return json{{"exponent", f.exponent}, {"intercept", f.intercept}, {"r2", f.r2}, {"xs", f.xs}, {"ys", f.ys}};
}

PlotSeries series_of(const std::string& label, const DecayFit& f) {
    return PlotSeries{label, f.xs, f.ys, f.exponent, f.intercept};
}

// Output sink for one run.
struct Output {
    std::filesystem::path dir;
    bool svg = false;
    RunResult result;

    void text(const std::string& name, const std::string& body) {
        const std::string path = (dir / name).string();
        write_text_file(path, body);
        result.files.push_back(path);
    }
    void csv(const std::string& name, const Csv& c) { text(name, c.text()); }
    void plot(const std::string& name, const std::string& title, const std::string& xl, const std::string& yl,
              const std::vector<PlotSeries>& s) {
        if (svg) text(name, loglog_svg(title, xl, yl, s));
    }
};

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter) { return sample_rng(root, counter)(); }

// ---------------------------------------------------------------- spherical

struct EnvelopeParams {
    std::vector<double> ts;
    double x_lo, x_hi, dx2, dx3;
};

EnvelopeParams read_envelope(Params& p) {
    EnvelopeParams e;
    e.ts = p.numbers("t", {0.5, 1.0, 2.0}, 1e-3, 20.0);
    e.x_lo = p.number("x_lo", 1.0, 1e-6, 1e6);
    e.x_hi = p.number("x_hi", 500.0, 1e-6, 1e7);
    e.dx2 = p.number("dx_h2", 0.25, 1e-4, 10.0);
    e.dx3 = p.number("dx_h3", 0.05, 1e-4, 10.0);
    if (!(e.x_hi > e.x_lo)) throw DomainError("x_hi must exceed x_lo");
    return e;
}

json envelope_check(const EnvelopeParams& e, Output& out) {
    const auto& ts = e.ts;
    const double x_lo = e.x_lo, x_hi = e.x_hi, dx2 = e.dx2, dx3 = e.dx3;
    Csv csv({"space", "t", "x", "sup"});
    json rows = json::array();
    std::vector<PlotSeries> plots;
    for (Space sp : {Space::H2, Space::H3}) {
        const std::string name = sp == Space::H2 ? "H2" : "H3";
        for (double t : ts) {
            const EnvelopeReport r = spherical_envelope(sp, t, x_lo, x_hi, sp == Space::H2 ? dx2 : dx3);
            for (std::size_t i = 0; i < r.fit.xs.size(); ++i) csv.row({name, fmt(t), fmt(r.fit.xs[i]), fmt(r.fit.ys[i])});
            rows.push_back({{"space", name}, {"t", t}, {"fit", fit_json(r.fit)}, {"constant", r.constant}});
            plots.push_back(series_of(name + " t=" + fmt(t), r.fit));
        }
    }
    out.csv("spherical_envelope.csv", csv);
    out.plot("spherical_envelope.svg", "spherical function envelopes", "s t", "dyadic sup |phi|", plots);
    return rows;
}

json weyl_check(int trials, int n_max, Output& out, std::uint64_t seed) {
    auto rng = sample_rng(seed, 1);
    std::normal_distribution<double> nd;

    auto phi = SpectralFunction::zeros(Space::H2, 0.0, 0.05, 161, 16);
    phi.band_lo = 2.0;
    phi.band_hi = 6.0;
    cplx coef[9];
    for (auto& c : coef) c = cplx(nd(rng), nd(rng));
    for (std::size_t j = 0; j < phi.ns; ++j) {
        const double s = phi.s(j);
        const double env = (s > 2.0 && s < 6.0) ? smooth_plateau(s - 4.0, 1.0, 2.0) : 0.0;
        for (std::size_t k = 0; k < phi.nb; ++k) {
            cplx v = 0.0;
            for (int n = -4; n <= 4; ++n) v += coef[n + 4] * std::polar(1.0, n * phi.theta(k)) * (1.0 + 0.1 * n * s);
            phi.at(j, k) = env * v;
        }
    }
    const auto ext = weyl_extend(phi);
    const std::size_t top = phi.ns - 1;

    // Both sides of the invariance equation by direct boundary quadrature.
    Csv csv({"trial", "s", "x", "y", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_error"});
    std::uniform_int_distribution<std::size_t> uj(45, 115);
    std::uniform_real_distribution<double> ux(-0.8, 0.8), uy(-0.7, 0.7);
    double worst = 0.0, scale = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t j = uj(rng);
        const double s = phi.s(j);
        const H2Point x{ux(rng), std::exp(uy(rng))};
        const int nodes = 4096;
        cplx lhs = 0.0, rhs = 0.0;
        for (int i = 0; i < nodes; ++i) {
            const double th = 2.0 * kPi * i / nodes;
            const double a = boundary_height(x, th);
            lhs += std::exp(cplx(0.5, s) * a) * boundary_interpolate(ext, top + j, th);
            rhs += std::exp(cplx(0.5, -s) * a) * boundary_interpolate(ext, top - j, th);
        }
        lhs /= double(nodes);
        rhs /= double(nodes);
        const double err = std::abs(lhs - rhs);
        worst = std::max(worst, err);
        scale = std::max(scale, std::abs(lhs));
        csv.row({std::to_string(trial), fmt(s), fmt(x.x), fmt(x.y), fmt(lhs.real()), fmt(lhs.imag()), fmt(rhs.real()),
                 fmt(rhs.imag()), fmt(err)});
    }
    out.csv("weyl_invariance.csv", csv);

    double unimodular = 0.0;
    for (int n = 0; n <= n_max; ++n)
        for (int i = 0; i <= 400; ++i) {
            const double s = -100.0 + 0.5 * i;
            unimodular = std::max(unimodular, std::abs(std::abs(gamma_n(n, s)) - 1.0));
            unimodular = std::max(unimodular, std::abs(std::abs(gamma_n(-n, s)) - 1.0));
        }
    return {{"trials", trials}, {"max_abs_error", worst}, {"scale", scale}, {"gamma_n_max", n_max},
            {"gamma_unimodularity_error", unimodular}};
}

json plancherel_check(double sigma, Output& out) {
    Csv csv({"check", "space", "relative_error"});
    json res = json::object();
    double worst_radial = 0.0;

    // Radial roundtrips through the calibrated inverse.
    for (Space sp : {Space::H2, Space::H3}) {
        double worst = 0.0;
        for (double c : {0.25, 1.2, 2.6}) {
            const auto f = RadialFunction::sample(sp, 6.0, 2e-3, [c](double t) {
                const double u = (t - c) / 0.5, v = (t + c) / 0.5;
                return std::exp(-u * u) + std::exp(-v * v) - 0.3 * std::exp(-t * t);
            });
            auto spec = SpectralFunction::zeros(sp, 0.0, 0.05, 3001, 1);
            std::vector<double> svals(spec.ns);
            for (std::size_t j = 0; j < spec.ns; ++j) svals[j] = spec.s(j);
            const auto vals = hc_transform(f, svals);
            for (std::size_t j = 0; j < spec.ns; ++j) spec.values[j] = vals[j];
            const auto back = hc_inverse(spec, plancherel(sp), 6.0, 2e-3);
            double num = 0.0, den = 0.0;
            for (std::size_t j = 1; j < f.size(); ++j) {
                const double w = sp == Space::H2 ? std::sinh(f.t(j)) : std::pow(std::sinh(f.t(j)), 2);
                num += w * std::pow(back.samples[j] - f.samples[j], 2);
                den += w * f.samples[j] * f.samples[j];
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
        csv.row({"radial_roundtrip", sp == Space::H2 ? "H2" : "H3", fmt(worst)});
        worst_radial = std::max(worst_radial, worst);
    }

    // Helgason transform on H2: Plancherel identity and roundtrip of Gaussian bumps.
    auto bump = [&](const H2Grid& g, H2Point c, double w) {
        return H2Function::sample(g, [&](const H2Point& q) {
            const double dx = q.x - c.x, dy = q.y - c.y;
            const double d = std::acosh(1.0 + (dx * dx + dy * dy) / (2.0 * q.y * c.y)) / w;
            return d < 6.0 ? cplx(std::exp(-d * d)) : cplx(0.0);
        });
    };
    const H2Grid g{-3.0, 0.025, 249, -1.7, 0.025, 137};
    const auto f1 = bump(g, H2Point{0.15, 1.1}, sigma);
    const auto f2 = bump(g, H2Point{-0.2, 0.9}, sigma + 0.05);
    const auto t1 = helgason_h2(f1, 0.0, 0.1, 361, 256);
    const auto t2 = helgason_h2(f2, 0.0, 0.1, 361, 256);
    const auto& cal = plancherel(Space::H2);
    const cplx space_side = h2_inner(f1, f2), freq_side = spectral_inner(t1, t2, cal);
    const double plancherel_err = std::abs(space_side - freq_side) / std::abs(space_side);
    const double norm_err = std::abs(h2_inner(f1, f1) - spectral_inner(t1, t1, cal)) / std::abs(h2_inner(f1, f1));

    const H2Grid coarse{g.x0, 2 * g.dx, (g.nx + 1) / 2, g.t0, 2 * g.dt, (g.nt + 1) / 2};
    const auto back = helgason_inverse_h2(t1, coarse, cal);
    const auto ref = bump(coarse, H2Point{0.15, 1.1}, sigma);
    H2Function diff = back;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= ref.values[i];
    const double roundtrip = std::sqrt(h2_inner(diff, diff).real() / h2_inner(ref, ref).real());

    csv.row({"helgason_plancherel", "H2", fmt(plancherel_err)});
    csv.row({"helgason_norm", "H2", fmt(norm_err)});
    csv.row({"helgason_roundtrip", "H2", fmt(roundtrip)});
    out.csv("plancherel.csv", csv);
    res["calibration_h2"] = cal.constant;
    res["calibration_h3"] = plancherel(Space::H3).constant;
    res["radial_roundtrip"] = worst_radial;
    res["helgason_plancherel"] = plancherel_err;
    res["helgason_norm"] = norm_err;
    res["helgason_roundtrip"] = roundtrip;
    res["max_residual"] = std::max({worst_radial, plancherel_err, norm_err, roundtrip});
    return res;
}

json cmd_spherical(Params& p, Output& out, std::uint64_t seed) {
    const auto checks = p.choices("checks", {"envelope"}, {"envelope", "weyl", "plancherel"});
    auto has = [&](const char* c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };
    std::optional<EnvelopeParams> env;
    int trials = 0, n_max = 0;
    double sigma = 0.0;
    if (has("envelope")) env = read_envelope(p);
    if (has("weyl")) {
        trials = p.integer("weyl_trials", 10, 1, 1000);
        n_max = p.integer("gamma_n_max", 60, 0, 500);
    }
    if (has("plancherel")) sigma = p.number("bump_width", 0.3, 0.1, 1.0);
    json s = json::object();
    for (const std::string& c : checks) {
        if (c == "envelope") s["envelope"] = envelope_check(*env, out);
        if (c == "weyl") s["weyl"] = weyl_check(trials, n_max, out, seed);
        if (c == "plancherel") s["plancherel"] = plancherel_check(sigma, out);
    }
    return s;
}

// ---------------------------------------------------------------- ktilde

json cmd_ktilde(Params& p, Output& out, std::uint64_t) {
    const auto lambdas = p.numbers("lambdas", {100.0, 200.0, 400.0}, 20.0, 2000.0);
    const auto betas = p.numbers("betas", {4.0, 16.0, 64.0}, 1.0, 1e4);
    const double eps = p.number("eps", 0.5, 0.05, 0.5);
    const double ds = p.number("ds", 0.1, 1e-3, 5.0);
    Csv csv({"lambda", "s", "ktilde"});
    json rows = json::array();
    std::vector<double> sup_global, sup_near;
    std::vector<PlotSeries> plots;
    for (double lam : lambdas) {
        const KTildeRegimes r = verify_ktilde_regimes(lam, betas, eps, ds);
        for (std::size_t i = 0; i < r.s.size(); ++i) csv.row({fmt(lam), fmt(r.s[i]), fmt(r.values[i])});
        sup_global.push_back(r.sup_global);
        sup_near.push_back(r.sup_near);
        rows.push_back({{"lambda", lam},
                        {"sup_global", r.sup_global},
                        {"s_at_global", r.s_at_global},
                        {"sup_near", r.sup_near},
                        {"betas", r.betas},
                        {"sup_far", r.sup_far},
                        {"s_at_far", r.s_at_far},
                        {"boundary_jump", r.boundary_jump},
                        {"beta_fit", fit_json(r.beta_fit)}});
        plots.push_back(series_of("far sup, lambda=" + fmt(lam), r.beta_fit));
    }
    out.csv("ktilde.csv", csv);
    out.plot("ktilde_beta.svg", "far-regime sup of k~ against beta", "beta", "sup |k~|", plots);
    json s{{"rows", rows}};
    if (lambdas.size() >= 2) {
        const DecayFit lf = fit_loglog(lambdas, sup_global);
        s["lambda_fit"] = fit_json(lf);
        out.plot("ktilde_lambda.svg", "global sup of k~ against lambda", "lambda", "sup |k~|",
                 {series_of("global sup", lf)});
    }
    const auto [lo, hi] = std::minmax_element(sup_near.begin(), sup_near.end());
    s["near_ratio"] = *hi / *lo;
    return s;
}

// ---------------------------------------------------------------- hessian

json cmd_hessian(Params& p, Output& out, std::uint64_t) {
    const auto rhos = p.numbers("rhos", {0.0, 0.3, 0.6}, 0.0, 0.95);
    const double h = p.number("h", 1e-4, 1e-7, 1e-2);
    Csv csv({"rho", "det", "det_expected", "det_rel_error", "max_entry_error", "gradient_residual"});
    json rows = json::array();
    for (double rho : rhos) {
        const HessianReport r = hessian_F(rho, h);
        const CriticalPointReport c = critical_point_residual(rho);
        const double rel = std::abs(r.det - r.det_expected) / std::abs(r.det_expected);
        csv.row({fmt(rho), fmt(r.det), fmt(r.det_expected), fmt(rel), fmt(r.max_entry_error), fmt(c.residual)});
        rows.push_back({{"rho", rho},
                        {"det", r.det},
                        {"det_expected", r.det_expected},
                        {"det_rel_error", rel},
                        {"max_entry_error", r.max_entry_error},
                        {"gradient_residual", c.residual},
                        {"hessian", r.hessian}});
    }
    out.csv("hessian.csv", csv);
    return {{"h", h}, {"rows", rows}};
}

// ---------------------------------------------------------------- beams

double reconstruction_residual(const SpectralFunction& phi, const BeamFamily& fam) {
    std::vector<H2Point> pts(fam.samples.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = fam.samples.point(i);
    auto oracle = helgason_inverse_h2(phi, pts, plancherel(Space::H2));
    for (std::size_t i = 0; i < pts.size(); ++i) oracle[i] *= fam.chi(pts[i]);
    const auto sum = fam.sum_all();
    std::vector<cplx> d(sum.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = sum[i] - oracle[i];
    return std::sqrt(fam.dense_norm2(d) / fam.dense_norm2(oracle));
}

json cmd_beams(Params& p, Output& out, std::uint64_t seed) {
    const double lambda = p.number("lambda", 400.0, 20.0, 5000.0);
    const double beta = p.number("beta", 2.0, 0.5, 50.0);
    const double eps1 = p.number("eps1", 0.05, 0.01, 0.25);
    const int samples = p.integer("samples", 5, 1, 100);
    const int nb = p.integer("nb", 128, 16, 2048);
    const auto deltas = p.numbers("deltas", {1.0, 0.2, 0.05}, 1e-6, 1.0);
    const auto ratio_lambdas = p.numbers("ratio_lambdas", {100.0, 200.0, 400.0}, 20.0, 5000.0, true);
    if (beta >= lambda / 4.0) throw DomainError("beta must be below lambda / 4");

    Csv csv({"sample", "seed", "beams", "residual", "square_sum_constant", "max_l1_l2"});
    json rows = json::array();
    std::vector<double> constants;
    std::map<double, std::size_t> worst_large;
    double worst_residual = 0.0;
    for (int i = 0; i < samples; ++i) {
        const std::uint64_t si = derive_seed(seed, std::uint64_t(i));
        const auto phi = random_band_limited(si, lambda, beta, std::size_t(nb));
        const BeamFamily fam = beam_decompose(phi, BeamCutoff{}, lambda, beta, eps1);
        const double res = reconstruction_residual(phi, fam);
        const double C = fam.square_sum_constant();
        json counts = json::array();
        for (double d : deltas) {
            const auto cls = classify_beams(fam, d, C);
            worst_large[d] = std::max(worst_large[d], cls.large.size());
            counts.push_back({{"delta", d}, {"large", cls.large.size()}, {"bound", std::ceil(1.0 / d)}});
        }
        const BeamRatioReport rr = beam_l1_l2(fam);
        constants.push_back(C);
        worst_residual = std::max(worst_residual, res);
        csv.row({std::to_string(i), std::to_string(si), std::to_string(fam.beams.size()), fmt(res), fmt(C),
                 fmt(rr.max_ratio)});
        rows.push_back({{"sample", i}, {"seed", si}, {"residual", res}, {"square_sum_constant", C},
                        {"classification", counts}, {"max_l1_l2", rr.max_ratio}});
    }
    out.csv("beams.csv", csv);

    double mean = 0.0;
    for (double c : constants) mean += c / double(constants.size());
    double spread = 0.0;
    for (double c : constants) spread = std::max(spread, std::abs(c - mean) / mean);
    json large = json::array();
    for (double d : deltas)
        large.push_back({{"delta", d}, {"max_large", worst_large[d]}, {"bound", std::ceil(1.0 / d)}});

    json s{{"rows", rows},
           {"max_residual", worst_residual},
           {"square_sum_mean", mean},
           {"square_sum_spread", spread},
           {"classification", large}};
    if (ratio_lambdas.size() >= 2) {
        std::vector<double> ratios;
        Csv rc({"lambda", "max_l1_l2"});
        for (double lam : ratio_lambdas) {
            const auto phi = random_band_limited(derive_seed(seed, 1000), lam, beta, std::size_t(nb));
            const BeamFamily fam = beam_decompose(phi, BeamCutoff{}, lam, beta, eps1);
            ratios.push_back(beam_l1_l2(fam).max_ratio);
            rc.row({fmt(lam), fmt(ratios.back())});
        }
        out.csv("beams_l1_l2.csv", rc);
        const DecayFit f = fit_loglog(ratio_lambdas, ratios);
        s["l1_l2_fit"] = fit_json(f);
        out.plot("beams_l1_l2.svg", "max L1/L2 of beams against lambda", "lambda", "max ||phi_mn||_1 / ||phi_mn||_2",
                 {series_of("max ratio", f)});
    }
    return s;
}

// ---------------------------------------------------------------- tubes

json cmd_tubes(Params& p, Output& out, std::uint64_t seed) {
    const int tubes = p.integer("tubes", 200, 1, 100000);
    const json default_settings = json::array({{{"delta", 0.3}, {"T", 2.0}, {"lambda", 400.0}, {"beta", 1.0}},
                                               {{"delta", 0.2}, {"T", 2.0}, {"lambda", 900.0}, {"beta", 1.0}}});
    const json settings = p.raw("settings", default_settings);
    const double eps1 = p.number("eps1", 0.05, 0.01, 0.25);
    const int inclusion_samples = p.integer("inclusion_samples", 500, 0, 100000);
    const auto offsets = p.numbers("offsets", {1e-2, 1e-3}, 1e-6, 0.1, true);
    if (!settings.is_array() || settings.empty()) throw DomainError("config key 'settings' must be a non-empty array");

    struct Setting {
        double delta, T, lam, beta;
    };
    std::vector<Setting> set;
    for (const json& js : settings) {
        Params sp(js);
        sp.reject_unknown({"delta", "T", "lambda", "beta"});
        set.push_back({sp.number("delta", 0.05, 1e-4, 0.5), sp.number("T", 2.0, 0.1, 10.0),
                       sp.number("lambda", 400.0, 20.0, 1e5), sp.number("beta", 1.0, 0.5, 100.0)});
    }

    Csv csv({"setting", "seed", "lambda", "beta", "eps1", "delta", "T", "count", "bound", "ratio"});
    json srows = json::array();
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto [delta, T, lam, beta] = set[k];
        const BeamGrid grid = build_beam_grid(lam, beta, eps1);
        const std::uint64_t sk = derive_seed(seed, 100 + k);
        const auto rows = tube_count_experiment(sk, tubes, delta, T, grid);
        double worst = 0.0, mean = 0.0;
        for (const CountRow& r : rows) {
            worst = std::max(worst, r.ratio);
            mean += r.ratio / double(rows.size());
            csv.row({std::to_string(k), std::to_string(r.seed), fmt(lam), fmt(beta), fmt(eps1), fmt(delta), fmt(T),
                     std::to_string(r.count), fmt(r.bound), fmt(r.ratio)});
        }
        srows.push_back({{"delta", delta}, {"T", T}, {"lambda", lam}, {"beta", beta}, {"N1", grid.N1},
                         {"N2", grid.N2}, {"max_ratio", worst}, {"mean_ratio", mean}});
    }
    out.csv("tubes.csv", csv);

    json inc = json::array();
    if (inclusion_samples > 0) {
        Csv ic({"offset", "samples", "forward_constant", "converse_constant", "max_height"});
        for (std::size_t k = 0; k < offsets.size(); ++k) {
            const InclusionReport r = inclusion_experiment(derive_seed(seed, 200 + k), inclusion_samples, offsets[k]);
            ic.row({fmt(offsets[k]), std::to_string(r.samples), fmt(r.forward_constant), fmt(r.converse_constant),
                    fmt(r.max_height)});
            inc.push_back({{"offset", offsets[k]}, {"samples", r.samples}, {"forward_constant", r.forward_constant},
                           {"converse_constant", r.converse_constant}, {"max_height", r.max_height}});
        }
        out.csv("tubes_inclusion.csv", ic);
    }
    return {{"settings", srows}, {"inclusion", inc}};
}

// ---------------------------------------------------------------- hecke

bool is_prime_power(std::int64_t n) {
    if (n < 2) return false;
    std::int64_t p = 2;
    while (n % p) ++p;
    while (n % p == 0) n /= p;
    return n == 1;
}

bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

json combination_json(const HeckeCombination& c) {
    json coeffs = json::object();
    for (const auto& [a, v] : c.coefficients) coeffs[std::to_string(a)] = to_string(v);
    return coeffs;
}

json cmd_hecke(Params& p, Output& out, std::uint64_t seed) {
    const auto qs = p.numbers("qs", {2, 3, 4, 5, 9, 25}, 2, 1e6);
    const int radius = p.integer("table_radius", 2, 0, kMaxTreeDepth / 4);
    const int q_max = p.integer("dichotomy_q_max", 97, 2, 10000);
    const int grid = p.integer("dichotomy_grid", 1000, 2, 1000000);
    const int N = p.integer("N", 100, 4, 100000);
    const int places = p.integer("places", 10, 0, 10000);
    const std::string regime_name = p.choice("regime", "inert", {"split", "inert"});
    const Regime regime = regime_name == "split" ? Regime::split : Regime::inert;
    const json max_c = p.raw("max_constant", "24");
    if (!max_c.is_string()) throw DomainError("config key 'max_constant' must be a rational string such as \"24\"");
    const Rational max_constant = parse_rational(max_c.get<std::string>());

    // Product tables and the quadratic relation for T(1).
    json tables = json::array();
    json relation = json::array();
    bool all_relations = true;
    for (double qd : qs) {
        const auto Q = std::int64_t(qd);
        if (double(Q) != qd) throw DomainError("config key 'qs' must hold integers");
        for (int a = 0; a <= radius; ++a)
            for (int b = a; b <= radius; ++b)
                tables.push_back({{"q", Q}, {"a", a}, {"b", b}, {"coefficients", combination_json(hecke_product(Q, a, b))}});
        HeckeCombination expected{Q, {}};
        expected.add(0, Rational(Q * (Q + 1)));
        expected.add(1, Rational(Q - 1));
        expected.add(2, Rational(1));
        const bool ok = hecke_product(Q, 1, 1) == expected;
        all_relations = all_relations && ok;
        relation.push_back({{"q", Q}, {"holds", ok}});
    }
    out.text("hecke_products.json", tables.dump(2) + "\n");

    // Dichotomy scan: tau1 = -1/4 + k / (2 (grid - 1)).
    Csv csv({"q", "regime", "points", "min_max_abs", "tau1_at_min", "tau2_at_min"});
    std::size_t checked = 0;
    int prime_powers = 0;
    for (int q = 2; q <= q_max; ++q) {
        if (!is_prime_power(q)) continue;
        ++prime_powers;
        for (Regime reg : {Regime::split, Regime::inert}) {
            Rational best = -1, best1 = 0, best2 = 0;
            for (int k = 0; k < grid; ++k) {
                const Rational tau1 = Rational(-1, 4) + Rational(k, 2 * (grid - 1));
                const Rational tau2 = dichotomy_check(q, tau1, reg);
                const Rational a1 = tau1 < 0 ? Rational(-tau1) : tau1, a2 = tau2 < 0 ? Rational(-tau2) : tau2;
                const Rational m = a1 > a2 ? a1 : a2;
                if (best < 0 || m < best) best = m, best1 = tau1, best2 = tau2;
                ++checked;
            }
            csv.row({std::to_string(q), reg == Regime::split ? "split" : "inert", std::to_string(grid), to_string(best),
                     to_string(best1), to_string(best2)});
        }
    }
    out.csv("hecke_dichotomy.csv", csv);

    // Amplifier over primes in [N/2, N] with seeded eigenvalues tau1 = k / 64 in [-2, 2].
    std::vector<EigenData> data;
    auto rng = sample_rng(seed, 7);
    std::uniform_int_distribution<int> pick(-128, 128);
    for (int q = (N + 1) / 2; q <= N && int(data.size()) < places; ++q)
        if (is_prime(q)) data.push_back(EigenData::from_tau1(q, Rational(pick(rng), 64), regime));
    const AmplifierNorms norms = amplifier_norms(data, N, max_constant);
    json amps = json::array();
    for (std::size_t i = 0; i < data.size(); ++i)
        amps.push_back({{"q", data[i].q()},
                        {"tau1", to_string(data[i].tau1())},
                        {"tau2", to_string(data[i].tau2())},
                        {"amplifier", combination_json(norms.amplifiers[i])},
                        {"eigenvalue", to_string(eigenvalue(norms.amplifiers[i], data[i]))}});
    const json amplifier{{"N", N},
                         {"regime", regime_name},
                         {"places", amps},
                         {"l1", to_string(norms.l1)},
                         {"l1_bound", norms.l1_bound.str()},
                         {"l2sq", to_string(norms.l2sq)},
                         {"a_O", to_string(norms.a_O)},
                         {"constant", to_string(norms.constant)},
                         {"constant_value", static_cast<double>(norms.constant)}};
    out.text("hecke_amplifier.json", amplifier.dump(2) + "\n");

    return {{"relation", relation},
            {"relations_hold", all_relations},
            {"dichotomy_points", checked},
            {"dichotomy_prime_powers", prime_powers},
            {"dichotomy_holds", true},
            {"amplifier", amplifier}};
}

// ---------------------------------------------------------------- decay

json decay_J(Params& p, Output& out) {
    const auto rs = p.numbers("rs", {100.0, 200.0, 400.0, 800.0}, 20.0, 5000.0);
    const double rho = p.number("rho", 0.0, 0.0, 0.9);
    Csv csv({"r", "re", "im", "abs", "abs_r2", "est_error", "resolved"});
    std::vector<double> mags, scaled;
    for (double r : rs) {
        const OscillatoryResult J = eval_J_rho(r, rho);
        mags.push_back(std::abs(J.value));
        scaled.push_back(mags.back() * r * r);
        csv.row({fmt(r), fmt(J.value.real()), fmt(J.value.imag()), fmt(mags.back()), fmt(scaled.back()),
                 fmt(J.est_error), J.resolved() ? "1" : "0"});
    }
    out.csv("decay_J.csv", csv);
    json s{{"rho", rho}, {"rs", rs}, {"abs", mags}, {"abs_r2", scaled}};
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    s["variation"] = *hi / *lo;
    if (rs.size() >= 2) {
        const DecayFit f = fit_loglog(rs, mags);
        s["fit"] = fit_json(f);
        out.plot("decay_J.svg", "|J(r; rho)| against r", "r", "|J|", {series_of("|J|", f)});
    }
    return s;
}

json decay_pair(Params& p, Output& out, std::uint64_t seed) {
    const auto ss = p.numbers("ss", {100.0, 200.0, 400.0, 800.0}, 10.0, 5000.0);
    const int samples = p.integer("samples", 20, 0, 1000);
    const double beta = p.number("beta", 4.0, 1.0, 1e4);
    const double scale = p.number("scale", 0.6, 0.05, 3.0);
    const double off1 = p.number("s1_offset", -1.3, -100.0, 100.0);
    const double off2 = p.number("s2_offset", 0.7, -100.0, 100.0);
    const double max_dist = p.number("max_dist", 2.0, 0.1, 10.0);
    // Separation floor s^{-1/2 + 0.1} beta^{1/2} at the smallest s, unless given.
    const double floor_default = std::pow(*std::min_element(ss.begin(), ss.end()), -0.4) * std::sqrt(beta);
    const double min_dist = p.number("min_dist_ma", std::max(0.35, floor_default), 0.0, 10.0);
    if (ss.size() < 2) throw DomainError("config key 'ss' needs at least two values");

    Csv csv({"sample", "dist_ma", "dist_e", "s", "abs", "est_error"});
    auto sweep = [&](const GroupElement& g, int label, double dma, double de) {
        std::vector<double> mags;
        for (double s : ss) {
            const OscillatoryResult r = eval_pair_integral(s, s + off1, s + off2, g);
            mags.push_back(std::abs(r.value));
            csv.row({std::to_string(label), fmt(dma), fmt(de), fmt(s), fmt(mags.back()), fmt(r.est_error)});
        }
        return fit_loglog(ss, mags);
    };

    json rows = json::array();
    std::vector<PlotSeries> plots;
    double worst = -HUGE_VAL;
    for (int i = 0; i < samples; ++i) {
        auto rng = sample_rng(seed, 300 + std::uint64_t(i));
        GroupElement g;
        double dma = 0.0, de = 0.0;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000) throw ResourceError("no element met the separation constraints");
            g = random_element(rng, scale);
            de = dist(g, GroupElement::identity());
            if (de > max_dist) continue;
            dma = dist_to_subgroup(g, Subgroup::MA);
            if (dma >= min_dist) break;
        }
        const DecayFit f = sweep(g, i, dma, de);
        worst = std::max(worst, f.exponent);
        rows.push_back({{"sample", i}, {"dist_ma", dma}, {"dist_e", de}, {"fit", fit_json(f)}});
        if (i < 4) plots.push_back(series_of("g" + std::to_string(i), f));
    }
    const DecayFit fe = sweep(GroupElement::identity(), -1, 0.0, 0.0);
    plots.push_back(series_of("g = e", fe));
    out.csv("decay_pair.csv", csv);
    out.plot("decay_pair.svg", "|J(s, s1, s2, g)| against s", "s", "|J|", plots);
    json s{{"min_dist_ma", min_dist}, {"rows", rows}, {"identity_fit", fit_json(fe)}};
    if (samples > 0) s["max_exponent"] = worst;
    return s;
}

json decay_split(Params& p, Output& out) {
    const double lambda = p.number("lambda", 400.0, 20.0, 5000.0);
    const auto betas = p.numbers("betas", {4.0, 16.0, 64.0}, 1.0, 1e6);
    const double eps0 = p.number("eps0", 0.05, 0.0, 0.49);
    const double ds = p.number("ds", 0.1, 1e-3, 5.0);
    const KnSplitReport r = kn_radial_split(lambda, betas, eps0, ds);
    Csv csv({"beta", "sup_far", "sup_near", "sup_off_band", "linearity"});
    for (std::size_t i = 0; i < r.betas.size(); ++i)
        csv.row({fmt(r.betas[i]), fmt(r.sup_far[i]), fmt(r.sup_near[i]), fmt(r.sup_off_band[i]), fmt(r.linearity[i])});
    out.csv("decay_split.csv", csv);
    json s{{"lambda", lambda}, {"eps0", eps0}, {"betas", r.betas}, {"sup_far", r.sup_far}, {"sup_near", r.sup_near},
           {"sup_off_band", r.sup_off_band}, {"linearity", r.linearity}};
    double near_ratio = 0.0;
    for (std::size_t i = 0; i < r.betas.size(); ++i) near_ratio = std::max(near_ratio, r.sup_near[i] / r.sup_far[i]);
    s["near_ratio"] = near_ratio;
    if (r.betas.size() >= 2) {
        s["beta_fit"] = fit_json(r.beta_fit);
        out.plot("decay_split.svg", "far-regime sup of the split transform", "beta", "sup |k^_1|",
                 {series_of("|s| >= lambda/2", r.beta_fit)});
    }
    return s;
}

json cmd_decay(Params& p, Output& out, std::uint64_t seed) {
    const std::string mode = p.choice("mode", "J", {"J", "pair", "split"});
    json s = mode == "J" ? decay_J(p, out) : mode == "pair" ? decay_pair(p, out, seed) : decay_split(p, out);
    s["mode"] = mode;
    return s;
}

using Command = json (*)(Params&, Output&, std::uint64_t);

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"spherical",
         {"checks", "t", "x_lo", "x_hi", "dx_h2", "dx_h3", "weyl_trials", "gamma_n_max", "bump_width"}},
        {"ktilde", {"lambdas", "betas", "eps", "ds"}},
        {"hessian", {"rhos", "h"}},
        {"beams", {"lambda", "beta", "eps1", "samples", "nb", "deltas", "ratio_lambdas"}},
        {"tubes", {"tubes", "settings", "eps1", "inclusion_samples", "offsets"}},
        {"hecke", {"qs", "table_radius", "dichotomy_q_max", "dichotomy_grid", "N", "places", "regime", "max_constant"}},
        {"decay",
         {"mode", "rs", "rho", "ss", "samples", "beta", "scale", "s1_offset", "s2_offset", "max_dist", "min_dist_ma",
          "lambda", "betas", "eps0", "ds"}}};
    return keys;
}

const std::map<std::string, Command>& registry() {
    static const std::map<std::string, Command> r{{"spherical", cmd_spherical}, {"ktilde", cmd_ktilde},
                                                  {"hessian", cmd_hessian},     {"beams", cmd_beams},
                                                  {"tubes", cmd_tubes},         {"hecke", cmd_hecke},
                                                  {"decay", cmd_decay}};
    return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"spherical", "ktilde", "hessian", "beams", "tubes", "hecke", "decay"};
    return names;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DomainError("malformed config " + path + ": " + e.what());
    }
}

RunResult run(const RunRequest& req) {
    const auto it = registry().find(req.command);
    if (it == registry().end()) throw DomainError("unknown command '" + req.command + "'");
    const json& cfg = req.config;
    if (!cfg.is_object()) throw DomainError("config must be a JSON object");
    if (!cfg.empty()) {
        if (!cfg.contains("version")) throw DomainError("config lacks a \"version\" field");
        if (!cfg.at("version").is_number_integer() || cfg.at("version").get<int>() != kConfigVersion)
            throw DomainError("unsupported config version (expected " + std::to_string(kConfigVersion) + ")");
    }
    if (cfg.contains("command") && cfg.at("command") != req.command)
        throw DomainError("config is for command " + cfg.at("command").dump() + ", not '" + req.command + "'");
    std::uint64_t seed = kDefaultSeed;
    if (cfg.contains("seed")) {
        if (!cfg.at("seed").is_number_unsigned()) throw DomainError("config key 'seed' must be a nonnegative integer");
        seed = cfg.at("seed").get<std::uint64_t>();
    }
    if (req.seed) seed = *req.seed;

    Output out;
    out.dir = req.out_dir;
    out.svg = req.svg;
    std::error_code ec;
    std::filesystem::create_directories(out.dir, ec);
    if (ec) throw ResourceError("cannot create output directory " + req.out_dir + ": " + ec.message());

    Params params(cfg);
    params.reject_unknown(allowed_keys().at(req.command));
    json summary = it->second(params, out, seed);
    summary["command"] = req.command;
    summary["seed"] = seed;

    const json run_record{{"version", kConfigVersion}, {"command", req.command}, {"seed", seed},
                          {"config", params.resolved()}};
    out.text("run.json", run_record.dump(2) + "\n");
    out.text(req.command + "_summary.json", summary.dump(2) + "\n");
    out.result.summary = std::move(summary);
    return out.result;
}

int exit_code_for_current_exception() {
    try {
        throw;
    } catch (const DomainError&) {
        return 2;
    } catch (const ResourceError&) {
        return 3;
    } catch (const AccuracyError&) {
        return 4;
    } catch (const json::exception&) {
        return 2;
    } catch (...) {
        return 1;
    }
}

}  // namespace hyperlap::cli
