#include <cmath>
#include <random>

#include "doctest.h"
#include "gamma_audit/gamma.hpp"
#include "support/oracles.hpp"

using namespace gamma_audit;

namespace {

bool same_map(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::isnan(a[k]) != std::isnan(b[k])) {
            return false;
        }
        if (!std::isnan(a[k]) && std::abs(a[k] - b[k]) > tol) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("random phantom pairs agree with the exhaustive gamma") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto p = oracle::phantom_pair(seed, 14);
        const GammaCriterion c = kGammaCriteria[seed % 4];
        const GammaMap fast = gamma_map(p.reference, p.evaluated, p.mask, c);
        CHECK_MESSAGE(same_map(fast.gamma, oracle::gamma(p.reference, p.evaluated, p.mask, c), 1e-9), seed);
    }
}

TEST_CASE("global rescaling of both grids leaves gamma unchanged") {
    std::mt19937_64 rng(17);
    for (std::uint64_t seed = 10; seed < 14; ++seed) {
        const auto p = oracle::phantom_pair(seed, 20);
        const double k = oracle::uniform(rng, 0.1, 10.0);
        const GammaMap a = gamma_map(p.reference, p.evaluated, p.mask, kGic2);
        const GammaMap b = gamma_map(p.reference.scaled(k), p.evaluated.scaled(k), p.mask, kGic2);
        CHECK(same_map(a.gamma, b.gamma, 1e-9));
    }
}

TEST_CASE("gamma is monotone in both tolerances") {
    for (std::uint64_t seed = 20; seed < 24; ++seed) {
        const auto p = oracle::phantom_pair(seed, 20);
        const GammaMap g1 = gamma_map(p.reference, p.evaluated, p.mask, kGic1);
        const GammaMap g2 = gamma_map(p.reference, p.evaluated, p.mask, kGic2);
        const GammaMap g3 = gamma_map(p.reference, p.evaluated, p.mask, kGic3);
        const GammaMap g4 = gamma_map(p.reference, p.evaluated, p.mask, kGic4);
        for (std::size_t k = 0; k < g1.gamma.size(); ++k) {
            if (std::isnan(g1.gamma[k])) {
                continue;
            }
            CHECK(g1.gamma[k] <= g2.gamma[k] + 1e-12);
            CHECK(g2.gamma[k] <= g3.gamma[k] + 1e-12);
            CHECK(g1.gamma[k] <= g4.gamma[k] + 1e-12);
        }
        const GammaStats s1 = gamma_stats(g1), s3 = gamma_stats(g3);
        CHECK(s1.gpr_pct >= s3.gpr_pct);
        CHECK(s1.median_gamma <= s3.median_gamma);
    }
}

TEST_CASE("gamma never exceeds the pure dose-difference ratio at the node") {
    const auto p = oracle::phantom_pair(31, 20);
    double norm = 0;
    for (std::size_t k = 0; k < p.mask.bits().size(); ++k) {
        if (p.mask.contains(k)) {
            norm = std::max(norm, p.reference.values()[k]);
        }
    }
    const GammaMap m = gamma_map(p.reference, p.evaluated, p.mask, kGic2);
    for (std::size_t k = 0; k < m.gamma.size(); ++k) {
        if (!std::isnan(m.gamma[k])) {
            const double ratio = std::abs(p.evaluated.values()[k] - p.reference.values()[k]) / (0.03 * norm);
            CHECK(m.gamma[k] <= ratio + 1e-12);
        }
    }
}

TEST_CASE("audit outputs stay in range on random pairs") {
    for (std::uint64_t seed = 40; seed < 46; ++seed) {
        const auto p = oracle::phantom_pair(seed, 18);
        const AuditResult r = audit_outputs(p.reference, p.evaluated, p.mask);
        for (std::size_t g = 0; g < 4; ++g) {
            CHECK(r.gpr_pct[g] >= 0.0);
            CHECK(r.gpr_pct[g] <= 100.0);
            CHECK(r.median_gamma[g] >= 0.0);
        }
        CHECK(r.dta_mm >= 0.0);
        CHECK(r.dta_mm <= 6.0);
        CHECK(r.com_distance_mm >= 0.0);
        CHECK(std::isfinite(r.mean_dose_diff_pct));
    }
}

}  // TEST_SUITE
