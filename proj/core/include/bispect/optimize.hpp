#pragma once

#include <functional>
#include <optional>
#include <string>

#include "bispect/vec.hpp"

namespace bispect {

enum class Method { GD, PGD, LBFGS, GN, PGN };

/// Elementwise box constraints; unset side means unbounded.
struct Bounds {
    std::optional<double> lower;
    std::optional<double> upper;
    bool any() const { return lower.has_value() || upper.has_value(); }
};

struct OptimizerConfig {
    Method method = Method::GN;
    int max_iter = 200;
    double tol_obj_change = 1e-4;        // raw |E_k - E_{k+1}|, paired with ...
    double tol_step_norm = 1e-4;         // ... raw ||y_{k+1} - y_k||
    double tol_newton_decrement = 1e-3;  // GN/PGN: sqrt(-grad.p)
    double armijo_c = 1e-4;
    double armijo_shrink = 0.5;
    int armijo_max_backtracks = 25;
    int lbfgs_memory = 5;
    double cg_rel_tol = 1e-1;  // inexact Newton: loose inner solves
    int cg_max_iter = 50;
    std::optional<double> lower_bound;
    std::optional<double> upper_bound;

    Bounds bounds() const { return {lower_bound, upper_bound}; }
};

enum class StopReason { Decrement, ObjectiveAndStep, MaxIterations, LineSearchFailure };

const char* to_string(StopReason r);

struct IterationRecord {
    int iter = 0;
    double objective = 0.0;
    double rof = 0.0;  // objective / initial objective
    double re = 0.0;   // caller-supplied relative error (NaN when absent)
    double step_norm = 0.0;
    int ls_iters = 0;  // backtracks taken this iteration
    double cum_seconds = 0.0;
};

struct RunReport {
    std::vector<IterationRecord> rows;
    StopReason reason = StopReason::MaxIterations;
    int iterations = 0;  // accepted steps
    double total_seconds = 0.0;
    double mean_ls_iters = 0.0;
    double min_rof = 0.0;
    double min_re = 0.0;
};

/// Callbacks defining a minimization problem. value and value_and_gradient are
/// required. GN/PGN need either newton_solve (direct step from the cached
/// factorization) or hessian_at (matrix-free action, solved with CG; for PGN the
/// action is masked to the inactive set). relative_error feeds the re column.
struct ObjectiveModel {
    std::function<double(const Vector&)> value;
    std::function<double(const Vector&, Vector&)> value_and_gradient;
    std::function<void(const Vector&, const Vector&, Vector&)> newton_solve;
    std::function<std::function<void(const Vector&, Vector&)>(const Vector&)> hessian_at;
    std::function<double(const Vector&)> relative_error;
};

/// sqrt(-grad.p) for a descent direction; positive grad.p is rejected.
double newton_decrement(const Vector& grad, const Vector& p);

/// Backtracking step from prior acceptance: doubled after a zero-backtrack
/// success, otherwise reused. Gauss-Newton variants always start from 1.
double adaptive_eta0(double prev_eta, int prev_backtracks);

Vector project_bounds(Vector y, const Bounds& b);

/// Gradient with components zeroed where the point sits on an active bound and
/// the gradient pushes outward; activity test is |y_i - bound| <= 1e-12 max(1,
/// |bound|).
Vector projected_gradient(const Vector& y, const Vector& grad, const Bounds& b);

std::vector<char> active_set(const Vector& y, const Bounds& b);

/// Minimizes in place; y is projected onto the bounds on entry for projected
/// methods. Bounds are only legal with PGD/PGN. Termination: newton decrement
/// below tolerance (GN/PGN, checked before the step), objective change and step
/// norm both below tolerance, max_iter, or a failed line search.
RunReport minimize(const ObjectiveModel& f, Vector& y, const OptimizerConfig& cfg);

/// Per-iteration CSV: iter,objective,rof,re,step_norm,ls_iters,cum_seconds.
void write_report_csv(const std::string& path, const RunReport& report);

Method method_from_string(const std::string& s);
const char* to_string(Method m);

}  // namespace bispect
