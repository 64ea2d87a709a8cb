#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "bispect/bispectrum.hpp"
#include "bispect/objectives.hpp"
#include "bispect/optimize.hpp"
#include "bispect/speckle.hpp"

namespace bispect {

enum class Formulation { E1Phi, E2Phi, E1Obj, E2Obj };

const char* to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);
bool is_image_formulation(Formulation f);
Variant variant_of(Formulation f);

const char* to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string& s);
double default_alpha(Regularizer r);

struct ExperimentConfig {
    SimulationConfig sim;
    double recovery_radius = 24.0;
    double inner_radius = 5.0;
    Formulation formulation = Formulation::E1Phi;
    Method method = Method::GN;
    Regularizer reg = Regularizer::None;
    double alpha = -1.0;   // < 0: per-regularizer default
    double tv_eps = -1.0;  // < 0: 1e-3 * max(initial image)
    OptimizerConfig opt;   // method/bounds fields are filled in per run
    int n_repeats = 1;
    std::string output_dir;  // empty: no artifacts written
    std::string index_path;  // nonempty: load the BIDX sidecar instead of rebuilding
    double init_epsilon = 1e-4;
    bool debug_dumps = false;
    int n_workers = 0;  // 0: hardware concurrency
};

/// Rejects combinations outside the supported roster (projected methods need an
/// image formulation, the negativity penalty pairs with unconstrained methods,
/// regularizers apply to image formulations only).
void validate_combination(const ExperimentConfig& cfg);

/// Method label used in tables: GD/LBFGS/GN on phases; +/-Dh/-TV suffix encodes
/// the regularizer on image formulations (GN+, PGD-Dh, PGN-TV, ...).
std::string method_label(Method m, Formulation f, Regularizer reg);

struct MetricsRow {
    std::string label;
    int run = 0;  // repeat index; -1 marks the across-repeat mean
    double min_rof = 0.0;
    double min_re = 0.0;
    double final_re_raw = 0.0;
    double iterations = 0.0;  // fractional after averaging across repeats
    double total_seconds = 0.0;
    double seconds_per_iter = 0.0;
    double mean_ls_iters = 0.0;
    std::string stop_reason;
};

MetricsRow average_rows(const std::vector<MetricsRow>& rows);
void write_summary_csv(const std::string& path, const std::vector<MetricsRow>& rows);

/// One simulated dataset plus the recursive starting points, shared by every
/// method variant run against it.
struct Problem {
    BispectrumIndex index;
    BispectrumData data;
    Vector o_true;       // truth in count units (sums to photons_object)
    Vector phi_init;     // recursive phase bootstrap
    Vector o_init;       // synthesized from (modulus, phi_init)
    Vector o_init_proj;  // energy-preserving projection, strictly positive
    double tv_eps = 0.0; // resolved smoothing scale for this dataset
};

/// Deterministic smooth multi-blob truth image on an n x n grid (unnormalized).
Vector make_test_object(int n);

/// Simulate, accumulate and initialize one dataset; `seed` overrides cfg.sim.rng_seed.
Problem setup_problem(const ExperimentConfig& cfg, std::uint64_t seed);

/// Registration-invariant relative error: min over integer circular shifts and the
/// 180 degree rotation of ||s * shifted - truth|| / ||truth|| with the least-squares
/// scalar s per shift.
double relative_error(const Vector& rec, const Vector& truth, int rows, int cols);
/// Plain ||rec - truth|| / ||truth||, gauge and scale included.
double relative_error_raw(const Vector& rec, const Vector& truth);

/// Objective callbacks, solver settings and starting point for one run. The
/// objective objects are owned by the model's closures; `problem` must outlive it.
struct RunSetup {
    ObjectiveModel model;
    OptimizerConfig opt;
    Vector y0;
    std::shared_ptr<PhaseObjective> phase;  // set for phase formulations
    std::shared_ptr<ImageObjective> image;  // set for image formulations
};

RunSetup make_run(const ExperimentConfig& cfg, const Problem& problem);

struct RunResult {
    RunReport report;
    Vector solution;     // recovered image (synthesized from phases when needed)
    Vector final_point;  // raw optimizer variable: phases or image pixels
    MetricsRow row;
};

RunResult run_single(const ExperimentConfig& cfg, const Problem& problem);

/// n_repeats independent datasets through one (formulation, method, regularizer)
/// combination; artifacts land under output_dir/<label>/run<k>/ when requested.
/// Returns the per-run rows followed by the mean row.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg);

/// Full method roster: {GD, LBFGS, GN} x {E1phi, E2phi} and {GD+, LBFGS+, GN+,
/// PGD-Dh, PGD-TV, PGN-Dh, PGN-TV} x {E1obj, E2obj}, each averaged over repeats.
std::vector<MetricsRow> run_comparison(const ExperimentConfig& cfg);

struct SweepRow {
    double value = 0.0;
    double init_re = 0.0;
    double proj_re = 0.0;
    double gn_e1phi = 0.0;
    double gn_e2phi = 0.0;
    double pgn_tv_e1obj = 0.0;
    double pgn_tv_e2obj = 0.0;
};

/// Averaged registered RE per sweep value for the fixed six-column roster;
/// parameter is one of "fried", "radius", "noise".
std::vector<SweepRow> run_robustness_sweep(const ExperimentConfig& cfg,
                                           const std::string& parameter,
                                           const std::vector<double>& values);
void write_sweep_csv(const std::string& path, const std::string& parameter,
                     const std::vector<SweepRow>& rows);

struct GridSearchRow {
    double alpha = 0.0;
    double mean_min_re = 0.0;
};

/// Pick-best-RE protocol: runs cfg's combination at each alpha, averaging min RE
/// over repeats. Rows come back in the given alpha order.
std::vector<GridSearchRow> run_gridsearch(const ExperimentConfig& cfg,
                                          const std::vector<double>& alphas);

/// Runs task(i) for i in [0, n_tasks) on up to n_workers threads (serial when
/// n_workers <= 1). The first exception, if any, is rethrown after all join.
void parallel_for(int n_tasks, int n_workers, const std::function<void(int)>& task);

}  // namespace bispect
