#include "bispect/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "bispect/fft.hpp"
#include "bispect/image_io.hpp"
#include "bispect/recursive_init.hpp"

namespace bispect {

// ---------------------------------------------------------------------------
// Names and validation
// ---------------------------------------------------------------------------

const char* to_string(Formulation f) {
    switch (f) {
        case Formulation::E1Phi: return "E1phi";
        case Formulation::E2Phi: return "E2phi";
        case Formulation::E1Obj: return "E1obj";
        case Formulation::E2Obj: return "E2obj";
    }
    return "unknown";
}

Formulation formulation_from_string(const std::string& s) {
    if (s == "E1phi") return Formulation::E1Phi;
    if (s == "E2phi") return Formulation::E2Phi;
    if (s == "E1obj") return Formulation::E1Obj;
    if (s == "E2obj") return Formulation::E2Obj;
    throw std::invalid_argument("unknown formulation: " + s);
}

bool is_image_formulation(Formulation f) {
    return f == Formulation::E1Obj || f == Formulation::E2Obj;
}

Variant variant_of(Formulation f) {
    return (f == Formulation::E1Phi || f == Formulation::E1Obj) ? Variant::E1 : Variant::E2;
}

const char* to_string(Regularizer r) {
    switch (r) {
        case Regularizer::None: return "none";
        case Regularizer::Penalty: return "penalty";
        case Regularizer::DiscreteGradient: return "dgrad";
        case Regularizer::TotalVariation: return "tv";
    }
    return "unknown";
}

Regularizer regularizer_from_string(const std::string& s) {
    std::string t(s);
    for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "none") return Regularizer::None;
    if (t == "penalty") return Regularizer::Penalty;
    if (t == "dgrad" || t == "dh") return Regularizer::DiscreteGradient;
    if (t == "tv") return Regularizer::TotalVariation;
    throw std::invalid_argument("unknown regularizer: " + s);
}

double default_alpha(Regularizer r) {
    switch (r) {
        case Regularizer::None: return 0.0;
        case Regularizer::Penalty: return 1e3;
        case Regularizer::DiscreteGradient: return 1e-2;
        case Regularizer::TotalVariation: return 1e4;
    }
    return 0.0;
}

void validate_combination(const ExperimentConfig& cfg) {
    const bool image = is_image_formulation(cfg.formulation);
    const bool proj = cfg.method == Method::PGD || cfg.method == Method::PGN;
    if (proj && !image) {
        throw std::invalid_argument(std::string("invalid combination: ") + to_string(cfg.method) +
                                    " requires an image formulation, got " +
                                    to_string(cfg.formulation));
    }
    if (!image && cfg.reg != Regularizer::None) {
        throw std::invalid_argument(std::string("invalid combination: regularizer ") +
                                    to_string(cfg.reg) + " with phase formulation " +
                                    to_string(cfg.formulation));
    }
    if (proj && cfg.reg == Regularizer::Penalty) {
        throw std::invalid_argument(std::string("invalid combination: penalty regularizer with ") +
                                    to_string(cfg.method) +
                                    " (the bound constraint already enforces nonnegativity)");
    }
    if (cfg.n_repeats < 1) throw std::invalid_argument("n_repeats must be at least 1");
    if (!(cfg.inner_radius > 0.0) || cfg.inner_radius > cfg.recovery_radius) {
        throw std::invalid_argument("need 0 < inner_radius <= recovery_radius");
    }
}

std::string method_label(Method m, Formulation f, Regularizer reg) {
    std::string label = to_string(m);
    if (is_image_formulation(f)) {
        switch (reg) {
            case Regularizer::None: break;
            case Regularizer::Penalty: label += "+"; break;
            case Regularizer::DiscreteGradient: label += "-Dh"; break;
            case Regularizer::TotalVariation: label += "-TV"; break;
        }
    }
    return label;
}

// ---------------------------------------------------------------------------
// Truth image and error metrics
// ---------------------------------------------------------------------------

Vector make_test_object(int n) {
    if (n < 4) throw std::invalid_argument("make_test_object: grid too small");
    Vector img(static_cast<std::size_t>(n) * n, 0.0);
    // Anisotropic Gaussian lobes plus one soft-edged disc: smooth enough for the
    // recursive bootstrap, edged enough to carry energy out to the recovery radius.
    struct Lobe {
        double cx, cy, sx, sy, rot, amp;
    };
    const Lobe lobes[] = {
        {0.38, 0.42, 0.075, 0.050, 0.52, 1.00},
        {0.62, 0.56, 0.050, 0.090, -0.35, 0.80},
        {0.52, 0.30, 0.035, 0.035, 0.00, 0.60},
        {0.46, 0.64, 0.130, 0.028, -0.30, 0.50},
    };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double y = (i + 0.5) / n;
            const double x = (j + 0.5) / n;
            double v = 0.0;
            for (const Lobe& l : lobes) {
                const double dx = x - l.cx;
                const double dy = y - l.cy;
                const double u = std::cos(l.rot) * dx + std::sin(l.rot) * dy;
                const double w = -std::sin(l.rot) * dx + std::cos(l.rot) * dy;
                v += l.amp * std::exp(-0.5 * (u * u / (l.sx * l.sx) + w * w / (l.sy * l.sy)));
            }
            const double r = std::hypot(x - 0.58, y - 0.38);
            v += 0.9 / (1.0 + std::exp((r - 0.085) / 0.012));
            img[static_cast<std::size_t>(i) * n + j] = v;
        }
    }
    return img;
}

double relative_error_raw(const Vector& rec, const Vector& truth) {
    if (rec.size() != truth.size()) throw std::invalid_argument("size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const double d = rec[i] - truth[i];
        num += d * d;
        den += truth[i] * truth[i];
    }
    if (!(den > 0.0)) throw std::invalid_argument("truth image is zero");
    return std::sqrt(num / den);
}

double relative_error(const Vector& rec, const Vector& truth, int rows, int cols) {
    if (rows < 1 || cols < 1 || rec.size() != static_cast<std::size_t>(rows) * cols ||
        truth.size() != rec.size()) {
        throw std::invalid_argument("size mismatch");
    }
    double truth2 = 0.0, rec2 = 0.0;
    for (double v : truth) truth2 += v * v;
    for (double v : rec) rec2 += v * v;
    if (!(truth2 > 0.0)) throw std::invalid_argument("truth image is zero");
    if (rec2 == 0.0) return 1.0;

    ComplexGrid fr = fft2_of_real(rec, rows, cols);
    ComplexGrid ft = fft2_of_real(truth, rows, cols);
    // corr(tau) = sum_x rec(x) truth(x + tau); the 180-degree rotated candidate has
    // spectrum conj(fr) (real input), so both correlation grids reuse the two FFTs.
    ComplexGrid straight(rows, cols), flipped(rows, cols);
    for (std::size_t i = 0; i < fr.data.size(); ++i) {
        straight.data[i] = std::conj(fr.data[i]) * ft.data[i];
        flipped.data[i] = fr.data[i] * ft.data[i];
    }
    fft2_inverse(straight);
    fft2_inverse(flipped);
    double best = 0.0;  // max over shift/rotation of <rec_reg, truth>^2
    std::size_t best_tau = 0;
    bool best_flip = false;
    for (std::size_t i = 0; i < straight.data.size(); ++i) {
        const double s2 = straight.data[i].real() * straight.data[i].real();
        const double f2 = flipped.data[i].real() * flipped.data[i].real();
        if (s2 > best) { best = s2; best_tau = i; best_flip = false; }
        if (f2 > best) { best = f2; best_tau = i; best_flip = true; }
    }

    // The correlation grid only selects the gauge; computing the residual as
    // truth2 - best/rec2 would cancel catastrophically for near-perfect
    // recoveries, so evaluate ||s rec_reg - truth||^2 directly at the winner.
    const int tr = static_cast<int>(best_tau) / cols;
    const int tc = static_cast<int>(best_tau) % cols;
    const auto registered = [&](int r, int c) {
        const int sr = best_flip ? (tr - r + rows) % rows : (r - tr + rows) % rows;
        const int sc = best_flip ? (tc - c + cols) % cols : (c - tc + cols) % cols;
        return rec[static_cast<std::size_t>(sr) * cols + sc];
    };
    double corr = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            corr += registered(r, c) * truth[static_cast<std::size_t>(r) * cols + c];
    const double s = corr / rec2;
    double resid2 = 0.0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double d = s * registered(r, c) - truth[static_cast<std::size_t>(r) * cols + c];
            resid2 += d * d;
        }
    }
    return std::sqrt(resid2 / truth2);
}

// ---------------------------------------------------------------------------
// Problem setup
// ---------------------------------------------------------------------------

Problem setup_problem(const ExperimentConfig& cfg, std::uint64_t seed) {
    SimulationConfig sim = cfg.sim;
    sim.rng_seed = seed;
    const int n = sim.image_side;

    Problem prob;
    const Vector shape = make_test_object(n);
    const double shape_sum = std::accumulate(shape.begin(), shape.end(), 0.0);
    prob.o_true.resize(shape.size());
    for (std::size_t i = 0; i < shape.size(); ++i) {
        prob.o_true[i] = shape[i] / shape_sum * sim.photons_object;
    }

    const FrameSet object_frames = simulate_frames(shape, sim, FrameSet::Kind::Object);
    Vector star(static_cast<std::size_t>(n) * n, 0.0);
    star[static_cast<std::size_t>(n / 2) * n + n / 2] = 1.0;
    const FrameSet star_frames = simulate_frames(star, sim, FrameSet::Kind::Star);

    if (!cfg.index_path.empty()) {
        prob.index = load_index(cfg.index_path);
        if (prob.index.map.image_side() != n ||
            prob.index.map.recovery_radius() != cfg.recovery_radius ||
            prob.index.inner_radius != cfg.inner_radius) {
            throw std::invalid_argument("index sidecar does not match the configuration: " +
                                        cfg.index_path);
        }
    } else {
        prob.index = build_index(build_phase_map(n, cfg.recovery_radius), cfg.inner_radius);
    }
    std::vector<ComplexGrid> ffts;
    ffts.reserve(object_frames.frames.size());
    for (const Vector& frame : object_frames.frames) ffts.push_back(fft2_of_real(frame, n, n));
    prob.data = accumulate_bispectrum(ffts, prob.index);
    prob.data.modulus = recover_modulus(object_frames, star_frames);

    prob.phi_init = recursive_phase(prob.data, prob.index);
    prob.o_init = synthesize_image(prob.phi_init, prob.data.modulus, prob.index.map);
    prob.o_init_proj = project_energy_preserving(prob.o_init, cfg.init_epsilon);
    const double peak = *std::max_element(prob.o_init.begin(), prob.o_init.end());
    prob.tv_eps = 1e-3 * std::max(peak, 1e-12);
    return prob;
}

// ---------------------------------------------------------------------------
// Single runs
// ---------------------------------------------------------------------------

RunSetup make_run(const ExperimentConfig& cfg, const Problem& problem) {
    validate_combination(cfg);
    RunSetup rs;
    rs.opt = cfg.opt;
    rs.opt.method = cfg.method;
    rs.opt.lower_bound.reset();
    rs.opt.upper_bound.reset();
    const Variant var = variant_of(cfg.formulation);
    const Problem* pp = &problem;
    const int side = problem.index.map.image_side();

    if (!is_image_formulation(cfg.formulation)) {
        auto po = std::make_shared<PhaseObjective>(problem.index, problem.data.beta,
                                                   problem.data.weights, var);
        rs.phase = po;
        rs.model.value = [po](const Vector& x) { return po->value(x); };
        rs.model.value_and_gradient = [po](const Vector& x, Vector& g) {
            return po->value_and_gradient(x, g);
        };
        if (cfg.method == Method::GN) {
            rs.model.newton_solve = [po](const Vector&, const Vector& g, Vector& p) {
                po->newton_step(g, p);
            };
        }
        rs.model.relative_error = [pp, side](const Vector& phi) {
            const Vector img = synthesize_image(phi, pp->data.modulus, pp->index.map);
            return relative_error(img, pp->o_true, side, side);
        };
        rs.y0 = problem.phi_init;
    } else {
        const double alpha = cfg.alpha >= 0.0 ? cfg.alpha : default_alpha(cfg.reg);
        const double eps = cfg.tv_eps > 0.0 ? cfg.tv_eps : problem.tv_eps;
        auto io = std::make_shared<ImageObjective>(problem.index, problem.data.beta,
                                                   problem.data.weights, var, cfg.reg, alpha, eps);
        rs.image = io;
        rs.model.value = [io](const Vector& x) { return io->value(x); };
        rs.model.value_and_gradient = [io](const Vector& x, Vector& g) {
            return io->value_and_gradient(x, g);
        };
        rs.model.hessian_at = [io](const Vector& o) {
            auto h = std::make_shared<ImageObjective::Hessian>(io->hessian_at(o));
            return [h](const Vector& v, Vector& out) { h->apply(v, out); };
        };
        rs.model.relative_error = [pp, side](const Vector& o) {
            return relative_error(o, pp->o_true, side, side);
        };
        // Bound-constrained methods need the feasible projected guess; the
        // unconstrained penalty runs start from the raw synthesis so the
        // negative pixels the penalty acts on are still present.
        if (cfg.method == Method::PGD || cfg.method == Method::PGN) {
            rs.y0 = problem.o_init_proj;
            rs.opt.lower_bound = 0.0;
        } else {
            rs.y0 = problem.o_init;
        }
    }
    return rs;
}

RunResult run_single(const ExperimentConfig& cfg, const Problem& problem) {
    RunSetup rs = make_run(cfg, problem);
    Vector y = rs.y0;
    RunResult res;
    res.report = minimize(rs.model, y, rs.opt);

    if (is_image_formulation(cfg.formulation)) {
        res.solution = y;
    } else {
        res.solution = synthesize_image(y, problem.data.modulus, problem.index.map);
    }
    res.final_point = std::move(y);

    MetricsRow& row = res.row;
    row.label = method_label(cfg.method, cfg.formulation, cfg.reg);
    row.min_rof = res.report.min_rof;
    row.min_re = res.report.min_re;
    row.final_re_raw = relative_error_raw(res.solution, problem.o_true);
    row.iterations = res.report.iterations;
    row.total_seconds = res.report.total_seconds;
    row.seconds_per_iter =
        res.report.iterations > 0 ? res.report.total_seconds / res.report.iterations : 0.0;
    row.mean_ls_iters = res.report.mean_ls_iters;
    row.stop_reason = to_string(res.report.reason);
    return res;
}

// ---------------------------------------------------------------------------
// Aggregation and artifacts
// ---------------------------------------------------------------------------

MetricsRow average_rows(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("average_rows: empty input");
    MetricsRow mean;
    mean.label = rows.front().label;
    mean.run = -1;
    mean.stop_reason = "-";
    for (const MetricsRow& r : rows) {
        mean.min_rof += r.min_rof;
        mean.min_re += r.min_re;
        mean.final_re_raw += r.final_re_raw;
        mean.iterations += r.iterations;
        mean.total_seconds += r.total_seconds;
        mean.seconds_per_iter += r.seconds_per_iter;
        mean.mean_ls_iters += r.mean_ls_iters;
    }
    const double k = static_cast<double>(rows.size());
    mean.min_rof /= k;
    mean.min_re /= k;
    mean.final_re_raw /= k;
    mean.iterations /= k;
    mean.total_seconds /= k;
    mean.seconds_per_iter /= k;
    mean.mean_ls_iters /= k;
    return mean;
}

void write_summary_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "label,run,min_rof,min_re,final_re_raw,iterations,total_seconds,seconds_per_iter,"
           "mean_ls_iters,stop_reason\n";
    char buf[512];
    for (const MetricsRow& r : rows) {
        const std::string run = r.run < 0 ? "mean" : std::to_string(r.run);
        std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%.17g,%.6f,%.6f,%.17g,%s\n",
                      r.label.c_str(), run.c_str(), r.min_rof, r.min_re, r.final_re_raw,
                      r.iterations, r.total_seconds, r.seconds_per_iter, r.mean_ls_iters,
                      r.stop_reason.c_str());
        out << buf;
    }
}

namespace {

void write_run_artifacts(const std::string& dir, const ExperimentConfig& cfg,
                         const Problem& problem, const RunResult& res) {
    std::filesystem::create_directories(dir);
    const int side = problem.index.map.image_side();
    write_report_csv(dir + "/report.csv", res.report);
    write_pgm16(dir + "/solution.pgm", res.solution, side, side);
    write_bimg(dir + "/solution.bimg", res.solution, side, side);
    if (cfg.debug_dumps) {
        // Gradient and wrapped data residual at the final iterate, as flat grids.
        RunSetup rs = make_run(cfg, problem);
        Vector grad;
        if (is_image_formulation(cfg.formulation)) {
            rs.image->value_and_gradient(res.final_point, grad);
            const Vector resid = rs.image->data_term().wrapped_residual(
                phase_of_object(res.final_point, problem.index.map));
            write_bimg(dir + "/gradient.bimg", grad, side, side);
            write_bimg(dir + "/residual.bimg", resid, 1, static_cast<int>(resid.size()));
        } else {
            rs.phase->value_and_gradient(res.final_point, grad);
            const Vector resid = rs.phase->wrapped_residual(res.final_point);
            write_bimg(dir + "/gradient.bimg", grad, 1, static_cast<int>(grad.size()));
            write_bimg(dir + "/residual.bimg", resid, 1, static_cast<int>(resid.size()));
        }
    }
}

int resolve_workers(const ExperimentConfig& cfg) {
    if (cfg.n_workers > 0) return cfg.n_workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void parallel_for(int n_tasks, int n_workers, const std::function<void(int)>& task) {
    if (n_tasks <= 0) return;
    n_workers = std::min(n_workers, n_tasks);
    if (n_workers <= 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const int i = next.fetch_add(1);
                if (i >= n_tasks) break;
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true);
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Experiment drivers
// ---------------------------------------------------------------------------

std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg) {
    validate_combination(cfg);
    const std::string combo_dir = std::string(to_string(cfg.formulation)) + "_" +
                                  to_string(cfg.method) + "_" + to_string(cfg.reg);
    std::vector<MetricsRow> rows(cfg.n_repeats);
    parallel_for(cfg.n_repeats, resolve_workers(cfg), [&](int k) {
        const Problem problem = setup_problem(cfg, cfg.sim.rng_seed + static_cast<std::uint64_t>(k));
        RunResult res = run_single(cfg, problem);
        res.row.run = k;
        if (!cfg.output_dir.empty()) {
            write_run_artifacts(cfg.output_dir + "/" + combo_dir + "/run" + std::to_string(k),
                                cfg, problem, res);
        }
        rows[k] = std::move(res.row);
    });
    rows.push_back(average_rows(rows));
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        write_summary_csv(cfg.output_dir + "/summary.csv", rows);
    }
    return rows;
}

std::vector<MetricsRow> run_comparison(const ExperimentConfig& cfg) {
    struct Combo {
        Formulation f;
        Method m;
        Regularizer r;
    };
    static const Combo roster[] = {
        {Formulation::E1Phi, Method::GD, Regularizer::None},
        {Formulation::E1Phi, Method::LBFGS, Regularizer::None},
        {Formulation::E1Phi, Method::GN, Regularizer::None},
        {Formulation::E2Phi, Method::GD, Regularizer::None},
        {Formulation::E2Phi, Method::LBFGS, Regularizer::None},
        {Formulation::E2Phi, Method::GN, Regularizer::None},
        {Formulation::E1Obj, Method::GD, Regularizer::Penalty},
        {Formulation::E1Obj, Method::LBFGS, Regularizer::Penalty},
        {Formulation::E1Obj, Method::GN, Regularizer::Penalty},
        {Formulation::E1Obj, Method::PGD, Regularizer::DiscreteGradient},
        {Formulation::E1Obj, Method::PGD, Regularizer::TotalVariation},
        {Formulation::E1Obj, Method::PGN, Regularizer::DiscreteGradient},
        {Formulation::E1Obj, Method::PGN, Regularizer::TotalVariation},
        {Formulation::E2Obj, Method::GD, Regularizer::Penalty},
        {Formulation::E2Obj, Method::LBFGS, Regularizer::Penalty},
        {Formulation::E2Obj, Method::GN, Regularizer::Penalty},
        {Formulation::E2Obj, Method::PGD, Regularizer::DiscreteGradient},
        {Formulation::E2Obj, Method::PGD, Regularizer::TotalVariation},
        {Formulation::E2Obj, Method::PGN, Regularizer::DiscreteGradient},
        {Formulation::E2Obj, Method::PGN, Regularizer::TotalVariation},
    };
    const int n_combos = static_cast<int>(std::size(roster));
    const int repeats = cfg.n_repeats;

    // Datasets are shared across the roster, so every method sees the same data.
    std::vector<Problem> problems(repeats);
    parallel_for(repeats, resolve_workers(cfg), [&](int k) {
        problems[k] = setup_problem(cfg, cfg.sim.rng_seed + static_cast<std::uint64_t>(k));
    });

    std::vector<std::vector<MetricsRow>> per_combo(n_combos,
                                                   std::vector<MetricsRow>(repeats));
    parallel_for(n_combos * repeats, resolve_workers(cfg), [&](int t) {
        const int c = t / repeats;
        const int k = t % repeats;
        ExperimentConfig run_cfg = cfg;
        run_cfg.formulation = roster[c].f;
        run_cfg.method = roster[c].m;
        run_cfg.reg = roster[c].r;
        RunResult res = run_single(run_cfg, problems[k]);
        res.row.run = k;
        if (!cfg.output_dir.empty()) {
            const std::string dir = cfg.output_dir + "/" +
                                    std::string(to_string(run_cfg.formulation)) + "_" +
                                    to_string(run_cfg.method) + "_" + to_string(run_cfg.reg) +
                                    "/run" + std::to_string(k);
            write_run_artifacts(dir, run_cfg, problems[k], res);
        }
        per_combo[c][k] = std::move(res.row);
    });

    std::vector<MetricsRow> rows;
    for (int c = 0; c < n_combos; ++c) {
        // Label the mean rows by formulation too; method labels repeat across E1/E2.
        MetricsRow mean = average_rows(per_combo[c]);
        mean.label = std::string(to_string(roster[c].f)) + " " + mean.label;
        for (MetricsRow& r : per_combo[c]) {
            r.label = std::string(to_string(roster[c].f)) + " " + r.label;
            rows.push_back(std::move(r));
        }
        rows.push_back(std::move(mean));
    }
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        write_summary_csv(cfg.output_dir + "/summary.csv", rows);
    }
    return rows;
}

std::vector<SweepRow> run_robustness_sweep(const ExperimentConfig& cfg,
                                           const std::string& parameter,
                                           const std::vector<double>& values) {
    if (parameter != "fried" && parameter != "radius" && parameter != "noise") {
        throw std::invalid_argument("unknown sweep parameter: " + parameter);
    }
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");

    struct Cell {
        double init = 0, proj = 0, gn1 = 0, gn2 = 0, tv1 = 0, tv2 = 0;
    };
    const int repeats = cfg.n_repeats;
    const int n_values = static_cast<int>(values.size());
    std::vector<Cell> cells(static_cast<std::size_t>(n_values) * repeats);

    parallel_for(n_values * repeats, resolve_workers(cfg), [&](int t) {
        const int vi = t / repeats;
        const int k = t % repeats;
        ExperimentConfig c = cfg;
        if (parameter == "fried") {
            c.sim.fried = values[vi];
        } else if (parameter == "radius") {
            c.recovery_radius = values[vi];
        } else {
            c.sim.sigma_rn = values[vi];
        }
        const Problem problem = setup_problem(c, c.sim.rng_seed + static_cast<std::uint64_t>(k));
        const int side = problem.index.map.image_side();
        Cell& cell = cells[static_cast<std::size_t>(vi) * repeats + k];
        cell.init = relative_error(problem.o_init, problem.o_true, side, side);
        cell.proj = relative_error(problem.o_init_proj, problem.o_true, side, side);

        auto run_combo = [&](Formulation f, Method m, Regularizer r) {
            ExperimentConfig rc = c;
            rc.formulation = f;
            rc.method = m;
            rc.reg = r;
            return run_single(rc, problem).row.min_re;
        };
        cell.gn1 = run_combo(Formulation::E1Phi, Method::GN, Regularizer::None);
        cell.gn2 = run_combo(Formulation::E2Phi, Method::GN, Regularizer::None);
        cell.tv1 = run_combo(Formulation::E1Obj, Method::PGN, Regularizer::TotalVariation);
        cell.tv2 = run_combo(Formulation::E2Obj, Method::PGN, Regularizer::TotalVariation);
    });

    std::vector<SweepRow> rows(n_values);
    for (int vi = 0; vi < n_values; ++vi) {
        SweepRow& row = rows[vi];
        row.value = values[vi];
        for (int k = 0; k < repeats; ++k) {
            const Cell& cell = cells[static_cast<std::size_t>(vi) * repeats + k];
            row.init_re += cell.init;
            row.proj_re += cell.proj;
            row.gn_e1phi += cell.gn1;
            row.gn_e2phi += cell.gn2;
            row.pgn_tv_e1obj += cell.tv1;
            row.pgn_tv_e2obj += cell.tv2;
        }
        row.init_re /= repeats;
        row.proj_re /= repeats;
        row.gn_e1phi /= repeats;
        row.gn_e2phi /= repeats;
        row.pgn_tv_e1obj /= repeats;
        row.pgn_tv_e2obj /= repeats;
    }
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        write_sweep_csv(cfg.output_dir + "/sweep.csv", parameter, rows);
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::string& parameter,
                     const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << parameter << ",init_re,proj_re,gn_e1phi,gn_e2phi,pgn_tv_e1obj,pgn_tv_e2obj\n";
    char buf[512];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.value,
                      r.init_re, r.proj_re, r.gn_e1phi, r.gn_e2phi, r.pgn_tv_e1obj,
                      r.pgn_tv_e2obj);
        out << buf;
    }
}

std::vector<GridSearchRow> run_gridsearch(const ExperimentConfig& cfg,
                                          const std::vector<double>& alphas) {
    validate_combination(cfg);
    if (alphas.empty()) throw std::invalid_argument("grid search needs at least one alpha");
    if (cfg.reg == Regularizer::None) {
        throw std::invalid_argument("grid search needs a regularized formulation");
    }
    const int repeats = cfg.n_repeats;
    std::vector<Problem> problems(repeats);
    parallel_for(repeats, resolve_workers(cfg), [&](int k) {
        problems[k] = setup_problem(cfg, cfg.sim.rng_seed + static_cast<std::uint64_t>(k));
    });

    const int n_alpha = static_cast<int>(alphas.size());
    std::vector<double> res(static_cast<std::size_t>(n_alpha) * repeats);
    parallel_for(n_alpha * repeats, resolve_workers(cfg), [&](int t) {
        const int a = t / repeats;
        const int k = t % repeats;
        ExperimentConfig c = cfg;
        c.alpha = alphas[a];
        res[static_cast<std::size_t>(a) * repeats + k] = run_single(c, problems[k]).row.min_re;
    });

    std::vector<GridSearchRow> rows(n_alpha);
    for (int a = 0; a < n_alpha; ++a) {
        rows[a].alpha = alphas[a];
        double s = 0.0;
        for (int k = 0; k < repeats; ++k) s += res[static_cast<std::size_t>(a) * repeats + k];
        rows[a].mean_min_re = s / repeats;
    }
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream out(cfg.output_dir + "/gridsearch.csv");
        if (!out) throw std::runtime_error("cannot open gridsearch.csv");
        out << "alpha,mean_min_re\n";
        char buf[128];
        for (const GridSearchRow& r : rows) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", r.alpha, r.mean_min_re);
            out << buf;
        }
    }
    return rows;
}

}  // namespace bispect
