// Microbenchmarks for the hot paths: sparse kernels, the factorization pipeline,
// objective evaluations on both sides of the FFT, and the simulator. All state is
// built once at the desk scale (N=64, R=24, inner radius 5) and shared.

#include <benchmark/benchmark.h>

#include <bispect/experiment.hpp>
#include <bispect/recursive_init.hpp>

using namespace bispect;

namespace {

struct DeskState {
    BispectrumIndex index;
    BispectrumData data;
    Vector o;
    Vector phi;
    Vector w_unit;

    DeskState() {
        const int n = 64;
        index = build_index(build_phase_map(n, 24.0), 5.0);
        o = make_test_object(n);
        const ComplexGrid fo = fft2_of_real(o, n, n);
        data = accumulate_bispectrum({fo}, index);
        data.modulus.resize(fo.data.size());
        for (std::size_t i = 0; i < fo.data.size(); ++i) data.modulus[i] = std::abs(fo.data[i]);
        phi = phase_of_object(o, index.map);
        w_unit.assign(data.weights.size(), 1.0);
    }
};

const DeskState& desk() {
    static const DeskState state;
    return state;
}

void BM_BuildIndex(benchmark::State& state) {
    const PhaseIndexMap map = build_phase_map(64, 24.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_index(map, 5.0));
    }
}
BENCHMARK(BM_BuildIndex);

void BM_Spmv(benchmark::State& state) {
    const DeskState& d = desk();
    Vector y(d.index.m());
    for (auto _ : state) {
        spmv(d.index.A, d.phi, y);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_Spmv);

void BM_SpmvTranspose(benchmark::State& state) {
    const DeskState& d = desk();
    Vector y(d.index.n());
    for (auto _ : state) {
        spmv_transpose(d.index.A, d.data.beta, y);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_SpmvTranspose);

void BM_FormNormalMatrix(benchmark::State& state) {
    const DeskState& d = desk();
    for (auto _ : state) {
        benchmark::DoNotOptimize(form_normal_matrix(d.index.A, d.data.weights));
    }
}
BENCHMARK(BM_FormNormalMatrix);

void BM_AmdOrdering(benchmark::State& state) {
    const SparseCSR h = form_normal_matrix(desk().index.A, desk().data.weights);
    for (auto _ : state) {
        benchmark::DoNotOptimize(amd_ordering(h));
    }
}
BENCHMARK(BM_AmdOrdering);

void BM_GNFactorizationBuild(benchmark::State& state) {
    const SparseCSR h = form_normal_matrix(desk().index.A, desk().data.weights);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_gn_factorization(h));
    }
}
BENCHMARK(BM_GNFactorizationBuild);

void BM_GNFactorizationSolve(benchmark::State& state) {
    const DeskState& d = desk();
    const SparseCSR h = form_normal_matrix(d.index.A, d.data.weights);
    const GNFactorization f = build_gn_factorization(h);
    Vector rhs(d.index.n());
    for (int i = 0; i < d.index.n(); ++i) rhs[i] = std::sin(0.1 * i);
    Vector x;
    for (auto _ : state) {
        f.solve(rhs, x);
        benchmark::DoNotOptimize(x.data());
    }
}
BENCHMARK(BM_GNFactorizationSolve);

void BM_PhaseValueE1(benchmark::State& state) {
    const DeskState& d = desk();
    const PhaseObjective f(d.index, d.data.beta, d.data.weights, Variant::E1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.value(d.phi));
    }
}
BENCHMARK(BM_PhaseValueE1);

void BM_PhaseGradientE2(benchmark::State& state) {
    const DeskState& d = desk();
    const PhaseObjective f(d.index, d.data.beta, d.data.weights, Variant::E2);
    Vector grad;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.value_and_gradient(d.phi, grad));
    }
}
BENCHMARK(BM_PhaseGradientE2);

void BM_JacobianApply(benchmark::State& state) {
    const DeskState& d = desk();
    Vector q(d.o.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::cos(0.01 * i);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dphi_do_forward(d.o, q, d.index.map));
    }
}
BENCHMARK(BM_JacobianApply);

void BM_JacobianAdjoint(benchmark::State& state) {
    const DeskState& d = desk();
    Vector r(d.index.n());
    for (int i = 0; i < d.index.n(); ++i) r[i] = std::cos(0.01 * i);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dphi_do_adjoint(d.o, r, d.index.map));
    }
}
BENCHMARK(BM_JacobianAdjoint);

void BM_ImageGradientTV(benchmark::State& state) {
    const DeskState& d = desk();
    const ImageObjective f(d.index, d.data.beta, d.data.weights, Variant::E2,
                           Regularizer::TotalVariation, 1e4, 1e-3);
    Vector grad;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.value_and_gradient(d.o, grad));
    }
}
BENCHMARK(BM_ImageGradientTV);

void BM_PhaseScreen(benchmark::State& state) {
    RandomStream rng(99, 0, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_phase_screen(64, 30.0, rng));
    }
}
BENCHMARK(BM_PhaseScreen);

void BM_Psf(benchmark::State& state) {
    RandomStream rng(99, 0, 0);
    const Vector screen = generate_phase_screen(64, 30.0, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_psf(screen, 64));
    }
}
BENCHMARK(BM_Psf);

void BM_SimulateFrame(benchmark::State& state) {
    const DeskState& d = desk();
    SimulationConfig cfg;
    cfg.n_frames = 1;
    for (auto _ : state) {
        cfg.rng_seed++;
        benchmark::DoNotOptimize(simulate_frames(d.o, cfg, FrameSet::Kind::Object));
    }
}
BENCHMARK(BM_SimulateFrame);

void BM_AccumulateBispectrum(benchmark::State& state) {
    const DeskState& d = desk();
    SimulationConfig cfg;
    cfg.n_frames = 5;
    const FrameSet frames = simulate_frames(d.o, cfg, FrameSet::Kind::Object);
    std::vector<ComplexGrid> ffts;
    for (const Vector& f : frames.frames) ffts.push_back(fft2_of_real(f, 64, 64));
    for (auto _ : state) {
        benchmark::DoNotOptimize(accumulate_bispectrum(ffts, d.index));
    }
}
BENCHMARK(BM_AccumulateBispectrum);

void BM_RecursivePhase(benchmark::State& state) {
    const DeskState& d = desk();
    for (auto _ : state) {
        benchmark::DoNotOptimize(recursive_phase(d.data, d.index));
    }
}
BENCHMARK(BM_RecursivePhase);

void BM_SynthesizeImage(benchmark::State& state) {
    const DeskState& d = desk();
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthesize_image(d.phi, d.data.modulus, d.index.map));
    }
}
BENCHMARK(BM_SynthesizeImage);

}  // namespace

BENCHMARK_MAIN();
