// Serial reference vs OpenMP kernel, same inputs and seeds.
#include <benchmark/benchmark.h>

#include "rhlab/curves2d.hpp"
#include "rhlab/fubini.hpp"
#include "rhlab/matrixstats.hpp"
#include "rhlab/packing.hpp"
#include "rhlab/roots1d.hpp"
#include "rhlab/transversality.hpp"

using namespace rhlab;

namespace {

template <bool Parallel>
void roots1d_mc(benchmark::State& st) {
    const EnsembleSpec spec{EnsembleKind::kostlan, 2, static_cast<int>(st.range(0)), 1};
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? roots1d::expected_roots_mc(spec, 2000)
                                          : roots1d::expected_roots_mc_serial(spec, 2000));
}

template <bool Parallel>
void goe_table(benchmark::State& st) {
    const int m = static_cast<int>(st.range(0));
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? matrixstats::estimate_e_table(m, 20000, 1)
                                          : matrixstats::estimate_e_table_serial(m, 20000, 1));
}

template <bool Parallel>
void pointwise_value(benchmark::State& st) {
    const EnsembleSpec spec{EnsembleKind::kostlan, 3, static_cast<int>(st.range(0)), 1};
    const auto x = fubini::ProjectivePoint::origin(2);
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? fubini::expected_pointwise_value(spec, x, 2000)
                                          : fubini::expected_pointwise_value_serial(spec, x, 2000));
}

template <bool Parallel>
void covering(benchmark::State& st) {
    const auto set = packing::greedy_separated_set(packing::Manifold::projective(2), 0.05, 1);
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? packing::covering_certificate(set, 2, 50000)
                                          : packing::covering_certificate_serial(set, 2, 50000));
}

template <bool Parallel>
void betti(benchmark::State& st) {
    const int d = static_cast<int>(st.range(0));
    curves2d::SphericalGrid::get(curves2d::SphericalGrid::level_for_degree(d));
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? curves2d::betti_statistics(d, 50, 1)
                                          : curves2d::betti_statistics_serial(d, 50, 1));
}

template <bool Parallel>
void sup_constants(benchmark::State& st) {
    const std::vector<int> ds{static_cast<int>(st.range(0))};
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? transversality::estimate_C1_C2(2, ds, 50, 2.0, 1)
                                          : transversality::estimate_C1_C2_serial(2, ds, 50, 2.0, 1));
}

template <bool Parallel>
void presence(benchmark::State& st) {
    const auto m = transversality::HypersurfaceModel::unit_circle();
    const auto x = fubini::ProjectivePoint::origin(2);
    const int d = static_cast<int>(st.range(0));
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? transversality::presence_probability_mc(m, d, 200, x, 1)
                                          : transversality::presence_probability_mc_serial(m, d, 200, x, 1));
}

}  // namespace

BENCHMARK(roots1d_mc<false>)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(roots1d_mc<true>)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(goe_table<false>)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(goe_table<true>)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(pointwise_value<false>)->Arg(25)->Unit(benchmark::kMillisecond);
BENCHMARK(pointwise_value<true>)->Arg(25)->Unit(benchmark::kMillisecond);
BENCHMARK(covering<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(covering<true>)->Unit(benchmark::kMillisecond);
BENCHMARK(betti<false>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(betti<true>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(sup_constants<false>)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(sup_constants<true>)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(presence<false>)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(presence<true>)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
