#include "localdeg/distfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

namespace localdeg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

// 16-point Gauss-Legendre rule on [-1, 1], positive half (symmetric).
constexpr std::array<double, 8> kGlNode = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr std::array<double, 8> kGlWeight = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// ln erfc(z) without underflow for large positive z.
double log_erfc(double z) {
    if (z < 25.0) return std::log(std::erfc(z));
    const double z2 = z * z;
    return -z2 - std::log(z * std::sqrt(kPi)) + std::log1p(-0.5 / z2 + 0.75 / (z2 * z2));
}

// Deterministic standard normal from explicit engine bits (the library
// distributions are not pinned across standard libraries).
double gauss(std::mt19937_64& rng) {
    double u1 = ((rng() >> 11) + 0.5) * 0x1p-53;
    double u2 = ((rng() >> 11) + 0.5) * 0x1p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

struct Params {
    double alpha = 0, lambda = 0, beta = 0, mu = 0, sigma = 0;
};

// Unnormalized log-weight g(x) of each family and its first three derivatives,
// defined for real x >= 1. The normalizer machinery below only needs these
// plus a closed-form (or quadrature) tail integral of exp(g).
struct Weight {
    Family fam;
    Params p;

    double g(double x) const {
        const double lx = std::log(x);
        switch (fam) {
            case Family::PL: return -p.alpha * lx;
            case Family::TPL: return -p.alpha * lx - p.lambda * x;
            case Family::EXP: return -p.lambda * x;
            case Family::SE: return (p.beta - 1.0) * lx - p.lambda * std::pow(x, p.beta);
            case Family::LN:
            case Family::LNP: {
                const double d = lx - p.mu;
                return -lx - d * d / (2.0 * p.sigma * p.sigma);
            }
        }
        return 0;
    }

    double g1(double x) const {
        switch (fam) {
            case Family::PL: return -p.alpha / x;
            case Family::TPL: return -p.alpha / x - p.lambda;
            case Family::EXP: return -p.lambda;
            case Family::SE:
                return (p.beta - 1.0) / x - p.lambda * p.beta * std::pow(x, p.beta - 1.0);
            case Family::LN:
            case Family::LNP:
                return -(1.0 + (std::log(x) - p.mu) / (p.sigma * p.sigma)) / x;
        }
        return 0;
    }

    double g2(double x) const {
        switch (fam) {
            case Family::PL: return p.alpha / (x * x);
            case Family::TPL: return p.alpha / (x * x);
            case Family::EXP: return 0;
            case Family::SE:
                return -(p.beta - 1.0) / (x * x) -
                       p.lambda * p.beta * (p.beta - 1.0) * std::pow(x, p.beta - 2.0);
            case Family::LN:
            case Family::LNP: {
                const double s2 = p.sigma * p.sigma;
                const double a = 1.0 + (std::log(x) - p.mu) / s2;
                return (a - 1.0 / s2) / (x * x);
            }
        }
        return 0;
    }

    double g3(double x) const {
        switch (fam) {
            case Family::PL: return -2.0 * p.alpha / (x * x * x);
            case Family::TPL: return -2.0 * p.alpha / (x * x * x);
            case Family::EXP: return 0;
            case Family::SE:
                return 2.0 * (p.beta - 1.0) / (x * x * x) -
                       p.lambda * p.beta * (p.beta - 1.0) * (p.beta - 2.0) *
                           std::pow(x, p.beta - 3.0);
            case Family::LN:
            case Family::LNP: {
                const double s2 = p.sigma * p.sigma;
                const double a = 1.0 + (std::log(x) - p.mu) / s2;
                return (3.0 / s2 - 2.0 * a) / (x * x * x);
            }
        }
        return 0;
    }

    // location of the maximum of g on [a, inf); used to anchor the log-domain
    // shift so the summation never overflows
    double mode(double a) const {
        switch (fam) {
            case Family::SE:
                if (p.beta > 1.0)
                    return std::max(a, std::pow((p.beta - 1.0) / (p.lambda * p.beta),
                                                1.0 / p.beta));
                return a;
            case Family::LN:
            case Family::LNP:
                return std::max(a, std::exp(p.mu - p.sigma * p.sigma));
            default:
                return a;  // PL, TPL, EXP are decreasing
        }
    }
};

// ∫_0^Y exp((1-alpha) y - lm (e^y - 1)) dy, the shape factor of the truncated
// power law's tail integral after substituting t = M e^y. Composite
// Gauss-Legendre with panel width tied to the initial decay rate.
double tpl_tail_shape(double alpha, double lm) {
    const double am1 = std::max(alpha - 1.0, 1e-13);
    const double y_cut = std::min(50.0 / am1, std::log1p(50.0 / lm));
    const double rate = am1 + lm;
    const double width = std::min(2.0, 10.0 / std::max(rate, 1e-3));
    const int panels = std::min(static_cast<int>(std::ceil(y_cut / width)), 1024);

    double total = 0;
    for (int k = 0; k < panels; ++k) {
        const double lo = y_cut * k / panels, hi = y_cut * (k + 1) / panels;
        const double mid = (lo + hi) / 2, half = (hi - lo) / 2;
        double acc = 0;
        for (int i = 0; i < 8; ++i) {
            const double yp = mid + half * kGlNode[i];
            const double ym = mid - half * kGlNode[i];
            acc += kGlWeight[i] * (std::exp((1.0 - alpha) * yp - lm * std::expm1(yp)) +
                                   std::exp((1.0 - alpha) * ym - lm * std::expm1(ym)));
        }
        total += acc * half;
    }
    return total;
}

// ln ∫_m^∞ exp(g(t)) dt
double log_tail_integral(const Weight& w, double m) {
    const double lm = std::log(m);
    switch (w.fam) {
        case Family::PL:
            return (1.0 - w.p.alpha) * lm - std::log(w.p.alpha - 1.0);
        case Family::TPL: {
            const double b = w.p.lambda * m;
            return (1.0 - w.p.alpha) * lm - b + std::log(tpl_tail_shape(w.p.alpha, b));
        }
        case Family::EXP:
            return -w.p.lambda * m - std::log(w.p.lambda);
        case Family::SE:
            return -w.p.lambda * std::pow(m, w.p.beta) - std::log(w.p.lambda * w.p.beta);
        case Family::LN:
        case Family::LNP: {
            const double z = (lm - w.p.mu) / (w.p.sigma * std::sqrt(2.0));
            return std::log(w.p.sigma * std::sqrt(kPi / 2.0)) + log_erfc(z);
        }
    }
    return -kInf;
}

// Euler-Maclaurin tail Σ_{x=m}^∞ exp(g(x) - gref):
//   ∫_m^∞ exp(g) + f(m)/2 - f'(m)/12 + f'''(m)/720, all scaled by exp(-gref).
double shifted_tail(const Weight& w, double m, double gref) {
    const double fs = std::exp(w.g(m) - gref);
    const double is = std::exp(log_tail_integral(w, m) - gref);
    const double d1 = w.g1(m), d2 = w.g2(m), d3 = w.g3(m);
    const double f3 = fs * (d1 * d1 * d1 + 3.0 * d1 * d2 + d3);
    return is + fs / 2.0 - fs * d1 / 12.0 + f3 / 720.0;
}

// ln Σ_{x=a}^∞ exp(g(x)) over integers. Sums directly until the log-weight is
// flat enough for the Euler-Maclaurin closure (or the terms become negligible)
// and works relative to the weight's maximum so nothing overflows.
double log_weight_sum(const Weight& w, double a) {
    if (w.fam == Family::EXP)  // geometric series, exact
        return -w.p.lambda * a - std::log(-std::expm1(-w.p.lambda));

    constexpr double kCap = 4e6;
    const double gref = w.g(w.mode(a));
    double acc = 0;
    for (double x = a;; x += 1.0) {
        const double d1 = w.g1(x);
        if (x >= a + 16 && std::fabs(d1) < 0.05 && std::fabs(w.g2(x)) < 0.01)
            return gref + std::log(acc + shifted_tail(w, x, gref));
        if (x >= a + 64 && acc < 1e-300 && d1 > 0)  // mass sits in a far-right peak
            return gref + std::log(shifted_tail(w, x, gref));
        if (x >= a + kCap) return gref + std::log(acc + shifted_tail(w, x, gref));
        const double t = std::exp(w.g(x) - gref);
        acc += t;
        if (x >= a + 16 && d1 < 0 && t <= acc * 1e-17)
            return gref + std::log(acc + shifted_tail(w, x + 1, gref));
    }
}

// ---------------------------------------------------------------- tail sample

struct Tail {
    std::vector<std::pair<std::uint32_t, std::uint64_t>> hist;  // ascending value
    std::size_t n = 0;
    double mean = 0;
    std::uint32_t xmin = 1;
};

Tail make_tail(const std::vector<std::uint32_t>& samples, std::uint32_t xmin,
               std::size_t min_tail) {
    Tail t;
    t.xmin = std::max<std::uint32_t>(xmin, 1);
    std::vector<std::uint32_t> kept;
    kept.reserve(samples.size());
    for (auto x : samples)
        if (x >= t.xmin) kept.push_back(x);
    if (kept.size() < min_tail)
        throw FitError(FitError::Kind::TooFewSamples,
                       "too few tail samples: " + std::to_string(kept.size()) + " at xmin=" +
                           std::to_string(t.xmin) + ", need at least " +
                           std::to_string(min_tail));
    std::sort(kept.begin(), kept.end());
    double sum = 0;
    for (std::size_t i = 0; i < kept.size();) {
        std::size_t j = i;
        while (j < kept.size() && kept[j] == kept[i]) ++j;
        t.hist.emplace_back(kept[i], j - i);
        sum += static_cast<double>(kept[i]) * static_cast<double>(j - i);
        i = j;
    }
    t.n = kept.size();
    t.mean = sum / static_cast<double>(t.n);
    return t;
}

// ----------------------------------------------------------------- optimizers

// Parameter boxes; the likelihood is penalized outside (the transforms keep
// positivity, so only the outer edges can trigger).
double box_excess(Family f, const Params& p) {
    double ex = 0;
    auto side = [&ex](double v, double lo, double hi) {
        if (v < lo) ex += (lo - v) / (std::fabs(lo) + 1.0);
        if (v > hi) ex += (v - hi) / (std::fabs(hi) + 1.0);
    };
    switch (f) {
        case Family::PL: side(p.alpha, 1.0 + 1e-13, 30.0); break;
        case Family::TPL:
            side(p.alpha, 1.0 + 1e-13, 30.0);
            side(p.lambda, 1e-12, 50.0);
            break;
        case Family::EXP: side(p.lambda, 1e-12, 50.0); break;
        case Family::SE:
            side(p.lambda, 1e-12, 50.0);
            side(p.beta, 0.05, 4.0);
            break;
        case Family::LN:
            side(p.sigma, 0.02, 25.0);
            side(p.mu, -40.0, 40.0);
            break;
        case Family::LNP:
            side(p.sigma, 0.02, 25.0);
            side(p.mu, 0.0, 40.0);
            break;
    }
    return ex;
}

// Tail log-likelihood as a function of unconstrained coordinates. Positive
// parameters live on a log scale; mu is used raw.
struct Objective {
    const Tail* tail;
    Family fam;
    bool fix_mu_zero = false;  // LNP fallback: only sigma varies

    Params unpack(const std::vector<double>& u) const {
        Params p;
        switch (fam) {
            case Family::PL: p.alpha = 1.0 + std::exp(u[0]); break;
            case Family::TPL:
                p.alpha = 1.0 + std::exp(u[0]);
                p.lambda = std::exp(u[1]);
                break;
            case Family::EXP: p.lambda = std::exp(u[0]); break;
            case Family::SE:
                p.lambda = std::exp(u[0]);
                p.beta = std::exp(u[1]);
                break;
            case Family::LN:
            case Family::LNP:
                if (fix_mu_zero) {
                    p.mu = 0.0;
                    p.sigma = std::exp(u[0]);
                } else {
                    p.mu = u[0];
                    p.sigma = std::exp(u[1]);
                }
                break;
        }
        return p;
    }

    double loglik(const Params& p) const {
        const Weight w{fam, p};
        const double lz = log_weight_sum(w, tail->xmin);
        if (!std::isfinite(lz)) return -kInf;
        double s = 0;
        for (const auto& [x, c] : tail->hist) s += static_cast<double>(c) * w.g(x);
        return s - static_cast<double>(tail->n) * lz;
    }

    double operator()(const std::vector<double>& u) const {
        const Params p = unpack(u);
        const double ex = box_excess(fam, p);
        if (ex > 0) return -1e13 * (1.0 + ex);
        const double ll = loglik(p);
        return std::isfinite(ll) ? ll : -1e13;
    }
};

// Bracketed golden-section maximization; assumes a unimodal objective.
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, int iters = 160) {
    const double r = 0.6180339887498949;
    double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && (hi - lo) > 1e-12 * (1.0 + std::fabs(lo) + std::fabs(hi));
         ++i) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    return f1 > f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

struct SimplexResult {
    std::vector<double> x;
    double f = -kInf;
};

// Nelder-Mead maximization with standard coefficients; deterministic.
template <class F>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, double step, int max_iter = 500) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> val(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
    for (std::size_t i = 0; i <= n; ++i) val[i] = f(pts[i]);

    auto order = [&] {
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = i + 1; j <= n; ++j)
                if (val[j] > val[i]) {
                    std::swap(val[i], val[j]);
                    std::swap(pts[i], pts[j]);
                }
    };
    order();

    for (int it = 0; it < max_iter; ++it) {
        double diam = 0;
        for (std::size_t i = 0; i < n; ++i)
            diam = std::max(diam, std::fabs(pts[n][i] - pts[0][i]));
        if (std::fabs(val[0] - val[n]) < 1e-10 * (1.0 + std::fabs(val[0])) && diam < 1e-8)
            break;

        std::vector<double> c(n, 0);  // centroid of all but the worst
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) c[k] += pts[i][k];
        }
        for (auto& v : c) v /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> r(n);
            for (std::size_t k = 0; k < n; ++k) r[k] = c[k] + t * (c[k] - pts[n][k]);
            return r;
        };

        auto xr = blend(1.0);
        double fr = f(xr);
        if (fr > val[0]) {
            auto xe = blend(2.0);
            double fe = f(xe);
            if (fe > fr) {
                pts[n] = std::move(xe);
                val[n] = fe;
            } else {
                pts[n] = std::move(xr);
                val[n] = fr;
            }
        } else if (fr > val[n - 1]) {
            pts[n] = std::move(xr);
            val[n] = fr;
        } else {
            auto xc = blend(fr > val[n] ? 0.5 : -0.5);
            double fc = f(xc);
            if (fc > std::max(fr, val[n])) {
                pts[n] = std::move(xc);
                val[n] = fc;
            } else {  // shrink toward the best point
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t k = 0; k < n; ++k)
                        pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
                    val[i] = f(pts[i]);
                }
            }
        }
        order();
    }
    return {pts[0], val[0]};
}

// --------------------------------------------------------------- family fits

double quick_pl_alpha(const Tail& t) {
    // continuous-MLE style starting value
    double s = 0;
    for (const auto& [x, c] : t.hist)
        s += static_cast<double>(c) * std::log(static_cast<double>(x) / (t.xmin - 0.5));
    if (s <= 0) return 2.5;
    return std::min(29.0, 1.0 + static_cast<double>(t.n) / s);
}

std::vector<double> initial_point(Family fam, const Tail& t) {
    switch (fam) {
        case Family::TPL: {
            const double a0 = std::clamp(quick_pl_alpha(t) - 0.2, 1.05, 28.0);
            const double l0 = std::clamp(0.5 / std::max(t.mean - t.xmin, 0.5), 1e-6, 5.0);
            return {std::log(a0 - 1.0), std::log(l0)};
        }
        case Family::SE: {
            double s = 0;
            for (const auto& [x, c] : t.hist)
                s += static_cast<double>(c) * std::pow(static_cast<double>(x), 0.7);
            const double l0 = std::clamp(static_cast<double>(t.n) / s, 1e-8, 10.0);
            return {std::log(l0), std::log(0.7)};
        }
        case Family::LN:
        case Family::LNP: {
            double m = 0, m2 = 0;
            for (const auto& [x, c] : t.hist) {
                const double lx = std::log(static_cast<double>(x));
                m += static_cast<double>(c) * lx;
                m2 += static_cast<double>(c) * lx * lx;
            }
            m /= static_cast<double>(t.n);
            m2 = m2 / static_cast<double>(t.n) - m * m;
            const double sd = std::sqrt(std::max(m2, 1e-4));
            return {std::clamp(m, -39.0, 39.0), std::log(std::clamp(sd, 0.05, 10.0))};
        }
        default: return {};
    }
}

// restart k > 0 perturbs the start point with seeded noise
std::vector<double> perturb(const std::vector<double>& u, std::mt19937_64& rng) {
    std::vector<double> v = u;
    for (auto& c : v) c += 0.7 * gauss(rng);
    return v;
}

// per-coordinate golden refinement around the simplex optimum; tightens the
// gradient enough for the stationarity guarantee
SimplexResult polish(const Objective& obj, SimplexResult best) {
    for (int round = 0; round < 3; ++round) {
        for (std::size_t i = 0; i < best.x.size(); ++i) {
            auto slice = [&](double v) {
                auto u = best.x;
                u[i] = v;
                return obj(u);
            };
            auto [v, fv] = golden_max(slice, best.x[i] - 0.4, best.x[i] + 0.4, 100);
            if (fv > best.f) {
                best.x[i] = v;
                best.f = fv;
            }
        }
    }
    return best;
}

SimplexResult maximize(const Objective& obj, const std::vector<double>& u0,
                       std::uint64_t seed, bool do_polish) {
    SimplexResult best;
    if (u0.size() == 1) {
        auto [v, fv] = golden_max([&](double x) { return obj({x}); }, u0[0] - 8.0,
                                  u0[0] + 8.0, 200);
        best = {{v}, fv};
    } else {
        std::mt19937_64 rng(seed);
        best = nelder_mead(obj, u0, 0.5);
        for (int k = 1; k < 3; ++k) {
            auto r = nelder_mead(obj, perturb(u0, rng), 0.5);
            if (r.f > best.f) best = r;
        }
    }
    return do_polish ? polish(obj, best) : best;
}

double ks_statistic(const Tail& t, const Weight& w, double log_z);

FitResult finish_fit(const Tail& t, Family fam, const Params& p) {
    const Weight w{fam, p};
    const double lz = log_weight_sum(w, t.xmin);
    double s = 0;
    for (const auto& [x, c] : t.hist) s += static_cast<double>(c) * w.g(x);
    const double ll = s - static_cast<double>(t.n) * lz;

    if (!std::isfinite(ll) || box_excess(fam, p) > 0)
        throw FitError(FitError::Kind::NonConvergence,
                       std::string("fit of ") + family_name(fam) + " at xmin=" +
                           std::to_string(t.xmin) + " did not converge (alpha=" +
                           std::to_string(p.alpha) + " lambda=" + std::to_string(p.lambda) +
                           " beta=" + std::to_string(p.beta) + " mu=" + std::to_string(p.mu) +
                           " sigma=" + std::to_string(p.sigma) + ")");

    FitResult r;
    r.family = fam;
    r.xmin = t.xmin;
    r.alpha = p.alpha;
    r.lambda = p.lambda;
    r.beta = p.beta;
    r.mu = p.mu;
    r.sigma = p.sigma;
    r.log_likelihood = ll;
    r.tail_sample_size = t.n;
    r.log_norm = lz;
    r.ks_distance = ks_statistic(t, w, lz);
    return r;
}

FitResult fit_tail(const Tail& t, Family fam, const FitOptions& opts) {
    if (t.hist.size() < 2)
        throw FitError(FitError::Kind::Degenerate,
                       "degenerate tail sample: all " + std::to_string(t.n) +
                           " values equal " + std::to_string(t.hist.front().first));

    // seed is diversified per family and xmin so concurrent fits stay
    // independent yet reproducible
    auto seed_for = [&](Family f) {
        return opts.seed ^ (static_cast<std::uint64_t>(f) * 0x9e3779b97f4a7c15ULL) ^
               (static_cast<std::uint64_t>(t.xmin) * 0xbf58476d1ce4e5b9ULL);
    };
    const std::uint64_t seed = seed_for(fam);

    Objective obj{&t, fam, false};
    switch (fam) {
        case Family::PL: {
            auto [u, fu] = golden_max([&](double x) { return obj({x}); }, -30.0,
                                      std::log(29.0), 200);
            (void)fu;
            return finish_fit(t, fam, obj.unpack({u}));
        }
        case Family::EXP: {
            // closed-form maximum of the geometric-type likelihood
            Params p;
            p.lambda = std::log1p(1.0 / (t.mean - t.xmin));
            return finish_fit(t, fam, p);
        }
        case Family::TPL:
        case Family::SE:
        case Family::LN: {
            auto best = maximize(obj, initial_point(fam, t), seed, opts.polish);
            return finish_fit(t, fam, obj.unpack(best.x));
        }
        case Family::LNP: {
            // stage one reruns the unconstrained fit with LN's own seed, so an
            // inactive constraint reproduces the LN result exactly
            Objective ln_obj{&t, Family::LN, false};
            auto best = maximize(ln_obj, initial_point(Family::LN, t),
                                 seed_for(Family::LN), opts.polish);
            Params p = ln_obj.unpack(best.x);
            if (p.mu >= 0) return finish_fit(t, fam, p);
            // constrained optimum sits on the mu = 0 boundary
            Objective c_obj{&t, Family::LNP, true};
            auto [us, fs] = golden_max([&](double x) { return c_obj({x}); },
                                       std::log(0.0201), std::log(24.9), 200);
            (void)fs;
            return finish_fit(t, fam, c_obj.unpack({us}));
        }
    }
    throw FitError(FitError::Kind::NonConvergence, "unreachable family");
}

double fitted_cdf(const Weight& w, double log_z, std::uint32_t x) {
    return 1.0 - std::exp(log_weight_sum(w, static_cast<double>(x) + 1.0) - log_z);
}

// exact sup over integers >= xmin: the empirical CDF is flat between observed
// values, so the extremes sit at each observed value and just before the next
double ks_statistic(const Tail& t, const Weight& w, double log_z) {
    const double n = static_cast<double>(t.n);
    double d = 0, cum = 0;
    if (t.hist.front().first > t.xmin)
        d = fitted_cdf(w, log_z, t.hist.front().first - 1);
    for (std::size_t j = 0; j < t.hist.size(); ++j) {
        cum += static_cast<double>(t.hist[j].second);
        const double s = cum / n;
        d = std::max(d, std::fabs(s - fitted_cdf(w, log_z, t.hist[j].first)));
        if (j + 1 < t.hist.size() && t.hist[j + 1].first - 1 > t.hist[j].first)
            d = std::max(d, std::fabs(s - fitted_cdf(w, log_z, t.hist[j + 1].first - 1)));
    }
    return std::clamp(d, 0.0, 1.0);
}

std::uint32_t resolve_xmin(const std::vector<std::uint32_t>& samples, const FitOptions& opts);

Weight weight_of(const FitResult& r) {
    return Weight{r.family, Params{r.alpha, r.lambda, r.beta, r.mu, r.sigma}};
}

// nested pairs share a limiting case; their ratio test uses the one-degree
// chi-square bound instead of the normal approximation
bool nested_pair(Family a, Family b, Family& big) {
    auto is = [&](Family x, Family y, Family large) {
        if ((a == x && b == y) || (a == y && b == x)) {
            big = large;
            return true;
        }
        return false;
    };
    return is(Family::PL, Family::TPL, Family::TPL) ||
           is(Family::EXP, Family::SE, Family::SE) ||
           is(Family::LNP, Family::LN, Family::LN);
}

}  // namespace

// ------------------------------------------------------------------- FitResult

double FitResult::log_pmf(std::uint32_t x) const {
    if (x < xmin) return -kInf;
    return weight_of(*this).g(static_cast<double>(x)) - log_norm;
}

double FitResult::pmf(std::uint32_t x) const { return std::exp(log_pmf(x)); }

double FitResult::cdf(std::uint32_t x) const {
    if (x < xmin) return 0.0;
    return std::clamp(fitted_cdf(weight_of(*this), log_norm, x), 0.0, 1.0);
}

double FitResult::ccdf(std::uint32_t x) const {
    if (x <= xmin) return 1.0;
    const double v =
        std::exp(log_weight_sum(weight_of(*this), static_cast<double>(x)) - log_norm);
    return std::clamp(v, 0.0, 1.0);
}

const char* family_name(Family f) {
    switch (f) {
        case Family::PL: return "PL";
        case Family::TPL: return "TPL";
        case Family::EXP: return "EXP";
        case Family::SE: return "SE";
        case Family::LN: return "LN";
        case Family::LNP: return "LNP";
    }
    return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
    for (Family f : kAllFamilies)
        if (name == family_name(f)) return f;
    return std::nullopt;
}

namespace {

std::uint32_t resolve_xmin(const std::vector<std::uint32_t>& samples, const FitOptions& opts) {
    if (opts.xmin.mode == XminPolicy::Mode::Fixed) return std::max<std::uint32_t>(1, opts.xmin.xmin);

    // KS-minimizing scan: candidate cutoffs are observed values keeping at
    // least min_tail samples; each is scored by the power-law fit's distance
    std::vector<std::uint32_t> uniq;
    for (auto x : samples)
        if (x >= 1) uniq.push_back(x);
    if (uniq.empty()) return 1;
    std::sort(uniq.begin(), uniq.end());
    const std::size_t total = uniq.size();
    std::vector<std::uint32_t> cand;
    for (std::size_t i = 0; i < total;) {
        std::size_t j = i;
        while (j < total && uniq[j] == uniq[i]) ++j;
        if (total - i >= opts.min_tail &&
            (opts.xmin.scan_limit == 0 || uniq[i] <= opts.xmin.scan_limit))
            cand.push_back(uniq[i]);
        i = j;
    }
    if (cand.empty()) return 1;
    if (cand.size() > 192) {  // stride down; the scan is a coarse search
        std::vector<std::uint32_t> thin;
        const double step = static_cast<double>(cand.size() - 1) / 191.0;
        for (int k = 0; k < 192; ++k)
            thin.push_back(cand[static_cast<std::size_t>(k * step)]);
        thin.erase(std::unique(thin.begin(), thin.end()), thin.end());
        cand.swap(thin);
    }

    std::uint32_t best_x = cand.front();
    double best_ks = kInf;
    FitOptions inner = opts;
    inner.polish = false;
    for (auto c : cand) {
        Tail t = make_tail(samples, c, opts.min_tail);
        try {
            FitResult r = fit_tail(t, Family::PL, inner);
            if (r.ks_distance < best_ks - 1e-12) {
                best_ks = r.ks_distance;
                best_x = c;
            }
        } catch (const FitError&) {
            // degenerate tail at this cutoff; skip it
        }
    }
    return best_x;
}

}  // namespace

FitResult fit(const std::vector<std::uint32_t>& samples, Family family,
              const FitOptions& opts) {
    const std::uint32_t xmin = resolve_xmin(samples, opts);
    Tail t = make_tail(samples, xmin, opts.min_tail);
    return fit_tail(t, family, opts);
}

Comparison compare(const std::vector<std::uint32_t>& samples, const FitResult& a,
                   const FitResult& b) {
    if (a.xmin != b.xmin)
        throw std::invalid_argument("compared fits must share the same xmin");
    Tail t = make_tail(samples, a.xmin, 1);

    // pointwise log-likelihood differences and their population variance
    double sum = 0, sum2 = 0;
    for (const auto& [x, c] : t.hist) {
        const double d = a.log_pmf(x) - b.log_pmf(x);
        sum += static_cast<double>(c) * d;
        sum2 += static_cast<double>(c) * d * d;
    }
    const double n = static_cast<double>(t.n);
    const double mean = sum / n;
    const double var = std::max(0.0, sum2 / n - mean * mean);

    Comparison cmp;
    cmp.r_raw = sum;
    Family big;
    cmp.nested = nested_pair(a.family, b.family, big);

    if (var < 1e-20) {  // identical pointwise likelihoods: indistinguishable
        cmp.r = 0.0;
        cmp.p = std::fabs(sum) < 1e-6 ? 1.0 : 0.0;
        return cmp;
    }
    cmp.r = sum / std::sqrt(n * var);
    if (cmp.nested) {
        const double big_ll = (a.family == big) ? a.log_likelihood : b.log_likelihood;
        const double small_ll = (a.family == big) ? b.log_likelihood : a.log_likelihood;
        cmp.p = std::erfc(std::sqrt(std::max(0.0, big_ll - small_ll)));
    } else {
        cmp.p = std::erfc(std::fabs(cmp.r) / std::sqrt(2.0));
    }
    return cmp;
}

Comparison compare(const std::vector<std::uint32_t>& samples, Family a, Family b,
                   const FitOptions& opts) {
    const std::uint32_t xmin = resolve_xmin(samples, opts);
    FitOptions fixed = opts;
    fixed.xmin = XminPolicy::fixed(xmin);
    FitResult fa = fit(samples, a, fixed);
    FitResult fb = fit(samples, b, fixed);
    return compare(samples, fa, fb);
}

bool BestFitSet::contains(Family f) const {
    return std::find(best.begin(), best.end(), f) != best.end();
}

const FitResult* BestFitSet::result(Family f) const {
    for (const auto& r : fits)
        if (r.family == f) return &r;
    return nullptr;
}

BestFitSet select_best(const std::vector<std::uint32_t>& samples, double threshold,
                       const FitOptions& opts) {
    const std::uint32_t xmin = resolve_xmin(samples, opts);
    FitOptions fixed = opts;
    fixed.xmin = XminPolicy::fixed(xmin);

    BestFitSet out;
    out.threshold = threshold;
    for (Family f : kAllFamilies) {
        try {
            out.fits.push_back(fit(samples, f, fixed));
        } catch (const FitError& e) {
            out.failed.emplace_back(f, e.what());
        }
    }
    if (out.fits.empty())
        throw FitError(FitError::Kind::AllFitsFailed,
                       "no family could be fitted: " + (out.failed.empty()
                                                            ? std::string("no data")
                                                            : out.failed.front().second));

    std::vector<bool> beaten(out.fits.size(), false);
    for (std::size_t i = 0; i < out.fits.size(); ++i) {
        for (std::size_t j = i + 1; j < out.fits.size(); ++j) {
            Comparison c = compare(samples, out.fits[i], out.fits[j]);
            out.comparisons.push_back(
                {out.fits[i].family, out.fits[j].family, c.r, c.p});
            if (c.p < threshold) {
                if (c.r < 0) beaten[i] = true;
                if (c.r > 0) beaten[j] = true;
            }
        }
    }
    for (std::size_t i = 0; i < out.fits.size(); ++i)
        if (!beaten[i]) out.best.push_back(out.fits[i].family);
    return out;
}

std::vector<std::pair<std::uint32_t, double>> ccdf_points(
    const std::vector<std::uint32_t>& samples) {
    std::vector<std::uint32_t> pos;
    for (auto x : samples)
        if (x >= 1) pos.push_back(x);
    std::sort(pos.begin(), pos.end());
    std::vector<std::pair<std::uint32_t, double>> out;
    const double n = static_cast<double>(pos.size());
    for (std::size_t i = 0; i < pos.size();) {
        std::size_t j = i;
        while (j < pos.size() && pos[j] == pos[i]) ++j;
        out.emplace_back(pos[i], static_cast<double>(pos.size() - i) / n);
        i = j;
    }
    return out;
}

void to_json(nlohmann::json& j, const FitResult& r) {
    j = nlohmann::json{{"family", family_name(r.family)},
                       {"xmin", r.xmin},
                       {"log_likelihood", r.log_likelihood},
                       {"tail_sample_size", r.tail_sample_size},
                       {"ks_distance", r.ks_distance},
                       {"log_norm", r.log_norm}};
    switch (r.family) {
        case Family::PL: j["alpha"] = r.alpha; break;
        case Family::TPL:
            j["alpha"] = r.alpha;
            j["lambda"] = r.lambda;
            break;
        case Family::EXP: j["lambda"] = r.lambda; break;
        case Family::SE:
            j["lambda"] = r.lambda;
            j["beta"] = r.beta;
            break;
        case Family::LN:
        case Family::LNP:
            j["mu"] = r.mu;
            j["sigma"] = r.sigma;
            break;
    }
}

void to_json(nlohmann::json& j, const BestFitSet& s) {
    j = nlohmann::json::object();
    j["threshold"] = s.threshold;
    j["best"] = nlohmann::json::array();
    for (Family f : s.best) j["best"].push_back(family_name(f));
    j["fits"] = nlohmann::json::array();
    for (const auto& r : s.fits) {
        nlohmann::json jr;
        to_json(jr, r);
        j["fits"].push_back(std::move(jr));
    }
    j["failed"] = nlohmann::json::array();
    for (const auto& [f, why] : s.failed)
        j["failed"].push_back({{"family", family_name(f)}, {"reason", why}});
    j["comparisons"] = nlohmann::json::array();
    for (const auto& c : s.comparisons)
        j["comparisons"].push_back({{"a", family_name(c.a)},
                                    {"b", family_name(c.b)},
                                    {"r", c.r},
                                    {"p", c.p}});
}

}  // namespace localdeg
