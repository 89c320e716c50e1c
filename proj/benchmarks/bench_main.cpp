#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gamma_audit/anova.hpp"
#include "gamma_audit/correlation.hpp"
#include "gamma_audit/design.hpp"
#include "gamma_audit/gamma.hpp"

using namespace gamma_audit;

namespace {

struct Pair {
    DoseGrid reference;
    DoseGrid evaluated;
    Mask mask;
};

Pair make_pair(std::size_t n) {
    const double c = static_cast<double>(n - 1) / 2.0;
    const GridGeometry g{n, n, 1.0, 1.0, -c, -c};
    DoseGrid ref = synth_phantom(g, {10.0, 0.15 * static_cast<double>(n), 0.0, 0.0, 0.2});
    DoseGrid eval = synth_phantom(g, {10.2, 0.15 * static_cast<double>(n), 0.6, -0.4, 0.2}, {7, 1.5});
    const double half = 0.3 * static_cast<double>(n);
    Mask mask = realize_roi(eval, {RoiShape::rectangle, half, half, 0.0, 0.0});
    return {std::move(ref), std::move(eval), std::move(mask)};
}

}  // namespace

static void BM_GammaMap(benchmark::State& state) {
    const Pair p = make_pair(static_cast<std::size_t>(state.range(0)));
    const GammaCriterion c = kGammaCriteria[static_cast<std::size_t>(state.range(1))];
    for (auto _ : state) {
        GammaMap m = gamma_map(p.reference, p.evaluated, p.mask, c);
        benchmark::DoNotOptimize(m.gamma.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(p.mask.count()));
}
BENCHMARK(BM_GammaMap)->ArgsProduct({{64, 128, 256}, {0, 3}})->Unit(benchmark::kMillisecond);

static void BM_AuditOutputs(benchmark::State& state) {
    const Pair p = make_pair(64);
    for (auto _ : state) {
        AuditResult r = audit_outputs(p.reference, p.evaluated, p.mask);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_AuditOutputs)->Unit(benchmark::kMillisecond);

static void BM_Bilinear(benchmark::State& state) {
    const Pair p = make_pair(128);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 127.0);
    std::vector<std::pair<double, double>> pts(4096);
    for (auto& q : pts) {
        q = {u(rng), u(rng)};
    }
    for (auto _ : state) {
        double sum = 0;
        for (const auto& [fi, fj] : pts) {
            sum += *sample_bilinear_index(p.reference, fi, fj);
        }
        benchmark::DoNotOptimize(sum);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pts.size()));
}
BENCHMARK(BM_Bilinear);

static void BM_Type3(benchmark::State& state) {
    const FactorialDesign d = full_factorial(default_factors());
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise;
    std::vector<double> y(d.points.size());
    for (double& v : y) {
        v = noise(rng);
    }
    const auto counts = d.level_counts();
    for (auto _ : state) {
        AnovaTable t = type3_ss(d.points, counts, y);
        benchmark::DoNotOptimize(t.residual.ss);
    }
}
BENCHMARK(BM_Type3)->Unit(benchmark::kMillisecond);

static void BM_Pearson(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = g(rng);
        y[k] = 0.5 * x[k] + g(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(pearson(x, y));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_Pearson)->Range(512, 1 << 16);
BENCHMARK_MAIN();
