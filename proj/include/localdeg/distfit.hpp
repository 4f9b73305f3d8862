#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace localdeg {

// The six discrete heavy-tail families fitted to integer degree samples.
// PL   p(x) ~ x^-alpha
// TPL  p(x) ~ x^-alpha exp(-lambda x)
// EXP  p(x) ~ exp(-lambda x)
// SE   p(x) ~ x^(beta-1) exp(-lambda x^beta)
// LN   p(x) ~ (1/x) exp(-(ln x - mu)^2 / (2 sigma^2))
// LNP  LN constrained to mu >= 0
enum class Family { PL, TPL, EXP, SE, LN, LNP };

inline constexpr Family kAllFamilies[] = {Family::PL,  Family::TPL, Family::EXP,
                                          Family::SE,  Family::LN,  Family::LNP};

const char* family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

class FitError : public std::runtime_error {
public:
    enum class Kind { TooFewSamples, Degenerate, NonConvergence, AllFitsFailed };

    FitError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct XminPolicy {
    enum class Mode { Fixed, ScanKS };
    Mode mode = Mode::Fixed;
    std::uint32_t xmin = 1;       // Fixed: the tail cutoff to use
    std::uint32_t scan_limit = 0;  // ScanKS: optional upper bound, 0 = data-driven

    static XminPolicy fixed(std::uint32_t x) { return {Mode::Fixed, x, 0}; }
    static XminPolicy scan_ks(std::uint32_t limit = 0) { return {Mode::ScanKS, 1, limit}; }
};

struct FitOptions {
    XminPolicy xmin = XminPolicy::fixed(1);
    std::size_t min_tail = 50;  // minimum sample count at/above xmin
    std::uint64_t seed = 0x9b1ad7c2f0e35a64ULL;
    bool polish = true;  // per-coordinate refinement after the simplex search
};

struct FitResult {
    Family family = Family::PL;
    std::uint32_t xmin = 1;
    // family-dependent subset; unused parameters stay 0
    double alpha = 0, lambda = 0, beta = 0, mu = 0, sigma = 0;
    double log_likelihood = 0;  // on the tail sample
    std::size_t tail_sample_size = 0;
    double ks_distance = 0;  // sup over integers >= xmin of |empirical - fitted CDF|
    double log_norm = 0;     // ln of the normalizing constant over x >= xmin

    double log_pmf(std::uint32_t x) const;
    double pmf(std::uint32_t x) const;
    double cdf(std::uint32_t x) const;   // P(X <= x); 0 below xmin
    double ccdf(std::uint32_t x) const;  // P(X >= x); 1 at xmin
};
void to_json(nlohmann::json& j, const FitResult& r);

FitResult fit(const std::vector<std::uint32_t>& samples, Family family,
              const FitOptions& opts = {});

struct Comparison {
    double r = 0;      // variance-normalized log-likelihood ratio, > 0 favors the first
    double r_raw = 0;  // plain log-likelihood difference on the tail
    double p = 1;      // two-sided significance of r
    bool nested = false;
};

// Both fits must share the same xmin; the tail is re-derived from samples.
Comparison compare(const std::vector<std::uint32_t>& samples, const FitResult& a,
                   const FitResult& b);
Comparison compare(const std::vector<std::uint32_t>& samples, Family a, Family b,
                   const FitOptions& opts = {});

struct BestFitSet {
    std::vector<Family> best;     // families not significantly beaten by any other
    std::vector<FitResult> fits;  // one per family that fitted successfully
    std::vector<std::pair<Family, std::string>> failed;
    struct PairResult {
        Family a, b;
        double r, p;
    };
    std::vector<PairResult> comparisons;  // all unordered pairs among fits
    double threshold = 0.1;

    bool contains(Family f) const;
    const FitResult* result(Family f) const;
};
void to_json(nlohmann::json& j, const BestFitSet& s);

BestFitSet select_best(const std::vector<std::uint32_t>& samples, double threshold = 0.1,
                       const FitOptions& opts = {});

// Empirical complementary CDF (P(X >= x)) over the distinct positive sample
// values; zeros are excluded, matching the fitting convention.
std::vector<std::pair<std::uint32_t, double>> ccdf_points(
    const std::vector<std::uint32_t>& samples);

}  // namespace localdeg
