#pragma once

// Reference machinery for the distribution-fitter tests: explicit probability
// tables built by plain summation, inverse-CDF sampling from them, and a naive
// tail log-likelihood. Everything here works in linear space with brute-force
// loops, independent of the library's log-domain numerics.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "localdeg/distfit.hpp"

namespace testutil {

struct OracleParams {
    double alpha = 0, lambda = 0, beta = 0, mu = 0, sigma = 0;
};

// Unnormalized weight at integer x, written out from the family definitions.
inline std::function<double(double)> oracle_weight(localdeg::Family f, OracleParams p) {
    using localdeg::Family;
    switch (f) {
        case Family::PL:
            return [p](double x) { return std::pow(x, -p.alpha); };
        case Family::TPL:
            return [p](double x) { return std::pow(x, -p.alpha) * std::exp(-p.lambda * x); };
        case Family::EXP:
            return [p](double x) { return std::exp(-p.lambda * x); };
        case Family::SE:
            return [p](double x) {
                return std::pow(x, p.beta - 1.0) * std::exp(-p.lambda * std::pow(x, p.beta));
            };
        case Family::LN:
        case Family::LNP:
            return [p](double x) {
                const double d = std::log(x) - p.mu;
                return std::exp(-d * d / (2.0 * p.sigma * p.sigma)) / x;
            };
    }
    throw std::logic_error("unknown family");
}

// Explicit normalized CDF over {xmin, xmin+1, ...}, built by summing weights
// until they stop mattering (or a hard cap for very fat tails).
struct DiscreteTable {
    std::uint32_t xmin = 1;
    std::vector<double> cdf;  // cdf[i] = P(X <= xmin + i)

    static DiscreteTable build(const std::function<double(double)>& w, std::uint32_t xmin,
                               std::size_t max_values = 4'000'000) {
        std::vector<double> mass;
        double total = 0;
        for (std::size_t i = 0; i < max_values; ++i) {
            const double v = w(static_cast<double>(xmin) + static_cast<double>(i));
            mass.push_back(v);
            total += v;
            if (i > 256 && v < total * 1e-16) break;
        }
        DiscreteTable t;
        t.xmin = xmin;
        t.cdf.resize(mass.size());
        double run = 0;
        for (std::size_t i = 0; i < mass.size(); ++i) {
            run += mass[i];
            t.cdf[i] = run / total;
        }
        t.cdf.back() = 1.0;
        return t;
    }

    std::uint32_t sample(std::mt19937_64& rng) const {
        const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        return xmin + static_cast<std::uint32_t>(it - cdf.begin());
    }
};

inline std::vector<std::uint32_t> draw_samples(localdeg::Family f, OracleParams p,
                                               std::uint32_t xmin, std::size_t n,
                                               std::uint64_t seed) {
    const DiscreteTable table = DiscreteTable::build(oracle_weight(f, p), xmin);
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> out(n);
    for (auto& x : out) x = table.sample(rng);
    return out;
}

// Tail log-likelihood by direct summation of the normalizer. Used to probe
// the fitted optimum from outside the library.
inline double oracle_loglik(localdeg::Family f, OracleParams p,
                            const std::vector<std::uint32_t>& samples, std::uint32_t xmin,
                            std::size_t max_values = 4'000'000) {
    const auto w = oracle_weight(f, p);
    double z = 0;
    for (std::size_t i = 0; i < max_values; ++i) {
        const double v = w(static_cast<double>(xmin) + static_cast<double>(i));
        z += v;
        if (i > 256 && v < z * 1e-16) break;
    }
    double s = 0;
    std::size_t n = 0;
    for (auto x : samples) {
        if (x < xmin) continue;
        s += std::log(w(static_cast<double>(x)));
        ++n;
    }
    return s - static_cast<double>(n) * std::log(z);
}

}  // namespace testutil
