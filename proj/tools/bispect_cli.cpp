// Command-line front end: simulate datasets, run recoveries, reproduce the
// comparison/sweep/grid-search tables, or run a quick self check.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bispect/experiment.hpp"
#include "bispect/image_io.hpp"
#include "bispect/recursive_init.hpp"
#include "bispect/sparse.hpp"

namespace {

using namespace bispect;

void add_common_flags(CLI::App* cmd, ExperimentConfig& cfg, std::string& method,
                      std::string& formulation, std::string& reg) {
    cmd->add_option("--image-side", cfg.sim.image_side, "grid side N (power of two)");
    cmd->add_option("--frames", cfg.sim.n_frames, "frames per set");
    cmd->add_option("--fried", cfg.sim.fried, "turbulence strength D/r0");
    cmd->add_option("--photons-object", cfg.sim.photons_object, "photo-events per object frame");
    cmd->add_option("--photons-star", cfg.sim.photons_star, "photo-events per star frame");
    cmd->add_option("--sigma-rn", cfg.sim.sigma_rn, "read noise std (counts)");
    cmd->add_option("--seed", cfg.sim.rng_seed, "base RNG seed");
    cmd->add_option("--radius", cfg.recovery_radius, "recovery radius R (pixels)");
    cmd->add_option("--inner-radius", cfg.inner_radius, "second-leg radius (pixels)");
    cmd->add_option("--method", method, "GD|PGD|LBFGS|GN|PGN");
    cmd->add_option("--formulation", formulation, "E1phi|E2phi|E1obj|E2obj");
    cmd->add_option("--reg", reg, "none|penalty|dgrad|tv");
    cmd->add_option("--alpha", cfg.alpha, "regularization weight (default per regularizer)");
    cmd->add_option("--tv-eps", cfg.tv_eps, "TV smoothing (default 1e-3 * max init)");
    cmd->add_option("--repeats", cfg.n_repeats, "independent problems to average");
    cmd->add_option("--out", cfg.output_dir, "output directory");
    cmd->add_option("--index", cfg.index_path, "BIDX sidecar to load instead of rebuilding");
    cmd->add_option("--max-iter", cfg.opt.max_iter, "iteration cap");
    cmd->add_option("--cg-max-iter", cfg.opt.cg_max_iter, "inner CG cap (image problems)");
    cmd->add_option("--workers", cfg.n_workers, "worker threads (0 = hardware)");
    cmd->add_flag("--debug-dumps", cfg.debug_dumps, "write gradient/residual BIMG dumps");
}

void resolve_enums(ExperimentConfig& cfg, const std::string& method,
                   const std::string& formulation, const std::string& reg) {
    cfg.method = method_from_string(method);
    cfg.formulation = formulation_from_string(formulation);
    cfg.reg = regularizer_from_string(reg);
}

void print_rows(const std::vector<MetricsRow>& rows) {
    std::printf("%-16s %5s %10s %10s %12s %7s %9s %8s %7s  %s\n", "label", "run", "min_rof",
                "min_re", "final_re_raw", "iters", "seconds", "sec/it", "ls/it", "stop");
    for (const MetricsRow& r : rows) {
        const std::string run = r.run < 0 ? "mean" : std::to_string(r.run);
        std::printf("%-16s %5s %10.4g %10.4f %12.4f %7.1f %9.2f %8.3f %7.2f  %s\n",
                    r.label.c_str(), run.c_str(), r.min_rof, r.min_re, r.final_re_raw,
                    r.iterations, r.total_seconds, r.seconds_per_iter, r.mean_ls_iters,
                    r.stop_reason.c_str());
    }
}

int cmd_simulate(const ExperimentConfig& cfg, int dump_frames) {
    if (cfg.output_dir.empty()) throw std::invalid_argument("simulate needs --out");
    std::filesystem::create_directories(cfg.output_dir);
    const Problem prob = setup_problem(cfg, cfg.sim.rng_seed);
    const int n = cfg.sim.image_side;

    write_pgm16(cfg.output_dir + "/truth.pgm", prob.o_true, n, n);
    write_bimg(cfg.output_dir + "/truth.bimg", prob.o_true, n, n);
    write_pgm16(cfg.output_dir + "/init.pgm", prob.o_init, n, n);
    write_bimg(cfg.output_dir + "/init.bimg", prob.o_init, n, n);
    write_pgm16(cfg.output_dir + "/init_proj.pgm", prob.o_init_proj, n, n);
    write_bimg(cfg.output_dir + "/init_proj.bimg", prob.o_init_proj, n, n);
    write_bimg(cfg.output_dir + "/modulus.bimg", prob.data.modulus, n, n);
    save_index(cfg.output_dir + "/index.bidx", prob.index);

    if (dump_frames > 0) {
        SimulationConfig sim = cfg.sim;
        const Vector shape = make_test_object(n);
        const FrameSet frames = simulate_frames(shape, sim, FrameSet::Kind::Object);
        const int count = std::min<int>(dump_frames, static_cast<int>(frames.frames.size()));
        for (int k = 0; k < count; ++k) {
            char name[64];
            std::snprintf(name, sizeof(name), "/frame%03d.pgm", k);
            write_pgm16(cfg.output_dir + name, frames.frames[k], n, n);
        }
    }

    const int side = prob.index.map.image_side();
    std::printf("simulated %d frames at %dx%d: %d unknowns, %d triplets\n", cfg.sim.n_frames,
                side, side, prob.index.n(), prob.index.m());
    std::printf("initial registered RE %.4f (projected %.4f)\n",
                relative_error(prob.o_init, prob.o_true, n, n),
                relative_error(prob.o_init_proj, prob.o_true, n, n));
    return 0;
}

int cmd_selftest(const ExperimentConfig& base) {
    // Quick end-to-end check: noiseless single frame must be recovered to
    // numerical zero by GN on both phase objectives.
    ExperimentConfig cfg = base;
    cfg.sim.image_side = 16;
    cfg.recovery_radius = 6.0;
    cfg.inner_radius = 3.0;
    cfg.n_repeats = 1;
    cfg.output_dir.clear();
    cfg.index_path.clear();

    const int n = cfg.sim.image_side;
    const Vector o = make_test_object(n);
    const ComplexGrid fo = fft2_of_real(o, n, n);
    BispectrumIndex index = build_index(build_phase_map(n, cfg.recovery_radius), cfg.inner_radius);
    BispectrumData data = accumulate_bispectrum({fo}, index);
    data.modulus.resize(fo.data.size());
    for (std::size_t i = 0; i < fo.data.size(); ++i) data.modulus[i] = std::abs(fo.data[i]);

    bool ok = true;
    for (Formulation f : {Formulation::E1Phi, Formulation::E2Phi}) {
        cfg.formulation = f;
        cfg.method = Method::GN;
        cfg.opt.tol_newton_decrement = 1e-9;
        cfg.opt.tol_obj_change = 1e-18;
        cfg.opt.tol_step_norm = 1e-18;

        Problem prob;
        prob.index = index;
        prob.data = data;
        prob.o_true = o;
        prob.phi_init = recursive_phase(prob.data, prob.index);
        prob.o_init = synthesize_image(prob.phi_init, prob.data.modulus, prob.index.map);
        prob.o_init_proj = project_energy_preserving(prob.o_init, cfg.init_epsilon);
        prob.tv_eps = 1e-3;

        const RunResult res = run_single(cfg, prob);
        const double final_obj = res.report.rows.back().objective;
        const bool pass = final_obj < 1e-12;
        std::printf("[%s] %s: final objective %.3e (%d iterations)\n", pass ? "PASS" : "FAIL",
                    to_string(f), final_obj, res.report.iterations);
        ok = ok && pass;
    }
    if (!ok) throw NumericalError("selftest failed");
    std::printf("selftest passed\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bispectral phase recovery toolkit"};
    app.require_subcommand(1);
    app.set_config("--config")->description("flat key=value file; flags override it");

    ExperimentConfig cfg;
    std::string method = "GN";
    std::string formulation = "E1phi";
    std::string reg = "none";
    int dump_frames = 0;
    std::string parameter = "noise";
    std::vector<double> sweep_values;
    std::vector<double> alphas;

    CLI::App* simulate = app.add_subcommand("simulate", "simulate a dataset and write artifacts");
    add_common_flags(simulate, cfg, method, formulation, reg);
    simulate->add_option("--dump-frames", dump_frames, "also write the first K object frames");

    CLI::App* recover = app.add_subcommand("recover", "run one method on simulated data");
    add_common_flags(recover, cfg, method, formulation, reg);

    CLI::App* compare = app.add_subcommand("compare", "run the full method roster");
    add_common_flags(compare, cfg, method, formulation, reg);

    CLI::App* sweep = app.add_subcommand("sweep", "robustness sweep over fried|radius|noise");
    add_common_flags(sweep, cfg, method, formulation, reg);
    sweep->add_option("--parameter", parameter, "fried|radius|noise");
    sweep->add_option("--values", sweep_values, "sweep values (defaults per parameter)")->delimiter(',');

    CLI::App* gridsearch = app.add_subcommand("gridsearch", "pick alpha by best mean RE");
    add_common_flags(gridsearch, cfg, method, formulation, reg);
    gridsearch->add_option("--alphas", alphas, "alpha grid (default: decades around the preset)")->delimiter(',');

    CLI::App* selftest = app.add_subcommand("selftest", "quick end-to-end consistency check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        resolve_enums(cfg, method, formulation, reg);
        if (simulate->parsed()) return cmd_simulate(cfg, dump_frames);
        if (recover->parsed()) {
            print_rows(run_experiment(cfg));
            return 0;
        }
        if (compare->parsed()) {
            print_rows(run_comparison(cfg));
            return 0;
        }
        if (sweep->parsed()) {
            if (sweep_values.empty()) {
                if (parameter == "fried") sweep_values = {10, 20, 30, 40, 50};
                else if (parameter == "radius") sweep_values = {16, 20, 24, 28, 32};
                else sweep_values = {1, 3, 5, 7, 9};
            }
            const auto rows = run_robustness_sweep(cfg, parameter, sweep_values);
            std::printf("%10s %9s %9s %9s %9s %12s %12s\n", parameter.c_str(), "init", "proj",
                        "GN-E1phi", "GN-E2phi", "PGN-TV-E1obj", "PGN-TV-E2obj");
            for (const SweepRow& r : rows) {
                std::printf("%10.3g %9.4f %9.4f %9.4f %9.4f %12.4f %12.4f\n", r.value, r.init_re,
                            r.proj_re, r.gn_e1phi, r.gn_e2phi, r.pgn_tv_e1obj, r.pgn_tv_e2obj);
            }
            return 0;
        }
        if (gridsearch->parsed()) {
            if (alphas.empty()) {
                const double base = cfg.alpha >= 0.0 ? cfg.alpha : default_alpha(cfg.reg);
                if (!(base > 0.0)) {
                    throw std::invalid_argument("gridsearch needs --reg with a positive alpha");
                }
                alphas = {base * 1e-2, base * 1e-1, base, base * 1e1, base * 1e2};
            }
            const auto rows = run_gridsearch(cfg, alphas);
            const GridSearchRow* best = &rows.front();
            std::printf("%12s %12s\n", "alpha", "mean_min_re");
            for (const GridSearchRow& r : rows) {
                std::printf("%12.4g %12.4f\n", r.alpha, r.mean_min_re);
                if (r.mean_min_re < best->mean_min_re) best = &r;
            }
            std::printf("best alpha: %.4g (mean min RE %.4f)\n", best->alpha, best->mean_min_re);
            return 0;
        }
        if (selftest->parsed()) return cmd_selftest(cfg);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
