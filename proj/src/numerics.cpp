#include "hyperlap/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_multimin.h>

#include "hyperlap/errors.hpp"

namespace hyperlap {

namespace {

template <unsigned N>
GaussRule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    GaussRule r;
    // boost stores the non-negative half; mirror it.
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] == 0.0) continue;
        r.nodes.push_back(-x[i]);
        r.weights.push_back(w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.nodes.push_back(x[i]);
        r.weights.push_back(w[i]);
    }
    return r;
}

std::atomic<unsigned> g_threads{0};

}  // namespace

const GaussRule& gauss20() {
    static const GaussRule r = make_rule<20>();
    return r;
}

const GaussRule& gauss15() {
    static const GaussRule r = make_rule<15>();
    return r;
}

cplx integrate_panels(const std::function<cplx(double)>& f, const std::vector<double>& edges,
                      double* err) {
    const GaussRule& g20 = gauss20();
    const GaussRule& g15 = gauss15();
    cplx total = 0.0;
    double e = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double mid = 0.5 * (edges[p] + edges[p + 1]);
        const double half = 0.5 * (edges[p + 1] - edges[p]);
        cplx s20 = 0.0;
        for (std::size_t i = 0; i < g20.nodes.size(); ++i) s20 += g20.weights[i] * f(mid + half * g20.nodes[i]);
        s20 *= half;
        total += s20;
        if (err) {
            cplx s15 = 0.0;
            for (std::size_t i = 0; i < g15.nodes.size(); ++i) s15 += g15.weights[i] * f(mid + half * g15.nodes[i]);
            e += std::abs(s20 - s15 * half);
        }
    }
    if (err) *err = e;
    return total;
}

double romberg_uniform(const std::vector<double>& samples, double h) {
    const std::size_t n = samples.size() - 1;
    if (n == 0 || n % 8 != 0) throw DomainError("romberg_uniform: interval count must be a positive multiple of 8");
    double trap[4];
    for (int level = 0; level < 4; ++level) {
        const std::size_t stride = std::size_t(1) << level;
        double s = 0.5 * (samples.front() + samples.back());
        for (std::size_t j = stride; j < n; j += stride) s += samples[j];
        trap[level] = s * h * double(stride);
    }
    // Richardson table on h^2 expansion.
    double r1[3], r2[2];
    for (int i = 0; i < 3; ++i) r1[i] = trap[i] + (trap[i] - trap[i + 1]) / 3.0;
    for (int i = 0; i < 2; ++i) r2[i] = r1[i] + (r1[i] - r1[i + 1]) / 15.0;
    return r2[0] + (r2[0] - r2[1]) / 63.0;
}

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t m = n / 2;
    return pairwise_sum(x, m) + pairwise_sum(x + m, n - m);
}

namespace {
struct NmContext {
    const std::function<double(const std::vector<double>&)>* f;
    std::vector<double> buf;
};
double nm_trampoline(const gsl_vector* v, void* params) {
    auto* ctx = static_cast<NmContext*>(params);
    for (std::size_t i = 0; i < ctx->buf.size(); ++i) ctx->buf[i] = gsl_vector_get(v, i);
    return (*ctx->f)(ctx->buf);
}
}  // namespace

std::vector<double> minimize(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, double step, double tol, int max_iter,
                             double* fmin) {
    const std::size_t n = x0.size();
    NmContext ctx{&f, std::vector<double>(n)};
    gsl_multimin_function fn{&nm_trampoline, n, &ctx};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* ss = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(x, i, x0[i]);
        gsl_vector_set(ss, i, step);
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x, ss);
    for (int it = 0; it < max_iter; ++it) {
        if (gsl_multimin_fminimizer_iterate(s)) break;
        if (gsl_multimin_fminimizer_size(s) < tol) break;
    }
    for (std::size_t i = 0; i < n; ++i) x0[i] = gsl_vector_get(s->x, i);
    if (fmin) *fmin = s->fval;
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(ss);
    gsl_vector_free(x);
    return x0;
}

double line_minimize(const std::function<double(double)>& f, double lo, double hi, double* fmin) {
    auto r = boost::math::tools::brent_find_minima(f, lo, hi, 40);
    if (fmin) *fmin = r.second;
    return r.first;
}

DecayFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("fit_loglog: need at least two points");
    std::vector<double> lx(xs.size()), ly(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DomainError("fit_loglog: nonpositive sample");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double c0, c1, cov00, cov01, cov11, sumsq;
    gsl_fit_linear(lx.data(), 1, ly.data(), 1, lx.size(), &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
    double mean = 0.0;
    for (double v : ly) mean += v;
    mean /= double(ly.size());
    double tss = 0.0;
    for (double v : ly) tss += (v - mean) * (v - mean);
    DecayFit fit;
    fit.exponent = c1;
    fit.intercept = c0;
    fit.r2 = tss > 0.0 ? 1.0 - sumsq / tss : 1.0;
    fit.xs = xs;
    fit.ys = ys;
    return fit;
}

std::mt19937_64 sample_rng(std::uint64_t root, std::uint64_t counter) {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return std::mt19937_64(z);
}

void set_thread_count(unsigned n) { g_threads = n; }

unsigned thread_count() {
    unsigned n = g_threads.load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const unsigned nt = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1));
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < nt; ++k) {
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next++; i < n; i = next++) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

double smooth_plateau(double x, double inner, double outer) {
    const double ax = std::abs(x);
    if (ax <= inner) return 1.0;
    if (ax >= outer) return 0.0;
    return smooth_step((outer - ax) / (outer - inner));
}

}  // namespace hyperlap
