#include "bispect/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "bispect/sparse.hpp"

namespace bispect {

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::Decrement: return "decrement";
        case StopReason::ObjectiveAndStep: return "objective_and_step";
        case StopReason::MaxIterations: return "max_iterations";
        case StopReason::LineSearchFailure: return "line_search_failure";
    }
    return "unknown";
}

const char* to_string(Method m) {
    switch (m) {
        case Method::GD: return "GD";
        case Method::PGD: return "PGD";
        case Method::LBFGS: return "LBFGS";
        case Method::GN: return "GN";
        case Method::PGN: return "PGN";
    }
    return "unknown";
}

Method method_from_string(const std::string& s) {
    if (s == "GD") return Method::GD;
    if (s == "PGD") return Method::PGD;
    if (s == "LBFGS") return Method::LBFGS;
    if (s == "GN") return Method::GN;
    if (s == "PGN") return Method::PGN;
    throw std::invalid_argument("unknown method: " + s);
}

double newton_decrement(const Vector& grad, const Vector& p) {
    const double gp = dot(grad, p);
    if (gp > 0.0) throw std::invalid_argument("newton_decrement: not a descent direction");
    return std::sqrt(-gp);
}

double adaptive_eta0(double prev_eta, int prev_backtracks) {
    return prev_backtracks == 0 ? 2.0 * prev_eta : prev_eta;
}

Vector project_bounds(Vector y, const Bounds& b) {
    if (b.lower) {
        for (double& x : y) x = std::max(x, *b.lower);
    }
    if (b.upper) {
        for (double& x : y) x = std::min(x, *b.upper);
    }
    return y;
}

namespace {

inline bool at_bound(double y, double bound) {
    return std::abs(y - bound) <= 1e-12 * std::max(1.0, std::abs(bound));
}

}  // namespace

std::vector<char> active_set(const Vector& y, const Bounds& b) {
    std::vector<char> active(y.size(), 0);
    if (!b.any()) return active;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (b.lower && at_bound(y[i], *b.lower)) active[i] = 1;
        if (b.upper && at_bound(y[i], *b.upper)) active[i] = 1;
    }
    return active;
}

Vector projected_gradient(const Vector& y, const Vector& grad, const Bounds& b) {
    Vector g = grad;
    if (!b.any()) return g;
    for (std::size_t i = 0; i < y.size(); ++i) {
        // On an active lower bound only negative gradient components survive
        // (descent moves into the feasible set); symmetric at the upper bound.
        if (b.lower && at_bound(y[i], *b.lower) && g[i] > 0.0) g[i] = 0.0;
        if (b.upper && at_bound(y[i], *b.upper) && g[i] < 0.0) g[i] = 0.0;
    }
    return g;
}

namespace {

struct LineSearchOutcome {
    bool success = false;
    double eta = 0.0;
    int backtracks = 0;
    double value = 0.0;
    Vector point;
};

// Armijo backtracking. For projected methods the trial point is Q(y + eta p) and
// the slope term uses the projected gradient, both supplied by the caller.
LineSearchOutcome armijo_search(const std::function<double(const Vector&)>& value,
                                const Vector& y, const Vector& p, double e0, double slope,
                                double eta0, const OptimizerConfig& cfg, bool projected,
                                const Bounds& bounds) {
    LineSearchOutcome out;
    double eta = eta0;
    for (int t = 0; t <= cfg.armijo_max_backtracks; ++t) {
        Vector trial(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) trial[i] = y[i] + eta * p[i];
        if (projected) trial = project_bounds(std::move(trial), bounds);
        const double e = value(trial);
        if (std::isfinite(e) && e <= e0 + cfg.armijo_c * eta * slope) {
            out.success = true;
            out.eta = eta;
            out.backtracks = t;
            out.value = e;
            out.point = std::move(trial);
            return out;
        }
        eta *= cfg.armijo_shrink;
    }
    out.backtracks = cfg.armijo_max_backtracks + 1;
    return out;
}

struct LbfgsMemory {
    std::deque<Vector> s, y;
    std::deque<double> rho;
    int capacity = 5;

    void push(Vector si, Vector yi) {
        const double sy = dot(si, yi);
        if (sy <= 1e-12 * norm2(si) * norm2(yi)) return;  // curvature guard
        if (static_cast<int>(s.size()) == capacity) {
            s.pop_front();
            y.pop_front();
            rho.pop_front();
        }
        s.push_back(std::move(si));
        y.push_back(std::move(yi));
        rho.push_back(1.0 / sy);
    }

    // Two-loop recursion; initial scaling gamma = s.y/y.y from the newest pair.
    Vector direction(const Vector& grad) const {
        Vector q = grad;
        const int k = static_cast<int>(s.size());
        std::vector<double> a(k);
        for (int i = k - 1; i >= 0; --i) {
            a[i] = rho[i] * dot(s[i], q);
            axpy(-a[i], y[i], q);
        }
        if (k > 0) {
            const double gamma = dot(s[k - 1], y[k - 1]) / dot(y[k - 1], y[k - 1]);
            scale(q, gamma);
        }
        for (int i = 0; i < k; ++i) {
            const double b = rho[i] * dot(y[i], q);
            axpy(a[i] - b, s[i], q);
        }
        scale(q, -1.0);
        return q;
    }
};

// Gauss-Newton direction restricted to the inactive set: rhs and operator are
// masked, so all CG iterates keep exact zeros on active coordinates. With an
// empty mask this is plain CG on the full problem.
Vector masked_cg_direction(const std::function<void(const Vector&, Vector&)>& hess,
                           const Vector& grad, const std::vector<char>& mask,
                           const OptimizerConfig& cfg) {
    Vector rhs(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) rhs[i] = mask[i] ? 0.0 : -grad[i];
    auto op = [&](const Vector& v, Vector& out) {
        Vector vm = v;
        for (std::size_t i = 0; i < vm.size(); ++i) {
            if (mask[i]) vm[i] = 0.0;
        }
        hess(vm, out);
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (mask[i]) out[i] = 0.0;
        }
    };
    Vector p;
    cg_solve(op, rhs, p, cfg.cg_rel_tol, cfg.cg_max_iter);
    return p;
}

void validate(const OptimizerConfig& cfg) {
    if (cfg.max_iter < 0) throw std::invalid_argument("max_iter must be nonnegative");
    if (!(cfg.tol_obj_change > 0.0) || !(cfg.tol_step_norm > 0.0) ||
        !(cfg.tol_newton_decrement > 0.0)) {
        throw std::invalid_argument("tolerances must be positive");
    }
    if (!(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0)) {
        throw std::invalid_argument("armijo_c must lie in (0,1)");
    }
    if (!(cfg.armijo_shrink > 0.0 && cfg.armijo_shrink < 1.0)) {
        throw std::invalid_argument("armijo_shrink must lie in (0,1)");
    }
    if (cfg.lower_bound && cfg.upper_bound && *cfg.lower_bound > *cfg.upper_bound) {
        throw std::invalid_argument("empty box: lower_bound > upper_bound");
    }
}

}  // namespace

RunReport minimize(const ObjectiveModel& f, Vector& y, const OptimizerConfig& cfg) {
    if (!f.value || !f.value_and_gradient) {
        throw std::invalid_argument("objective callbacks are required");
    }
    validate(cfg);
    const bool projected = cfg.method == Method::PGD || cfg.method == Method::PGN;
    const bool gauss_newton = cfg.method == Method::GN || cfg.method == Method::PGN;
    const Bounds bounds = cfg.bounds();
    if (bounds.any() && !projected) {
        throw std::invalid_argument("bounds require a projected method");
    }
    if (gauss_newton && !f.newton_solve && !f.hessian_at) {
        throw std::invalid_argument("Gauss-Newton needs newton_solve or hessian_at");
    }
    if (cfg.method == Method::PGN && !f.hessian_at) {
        throw std::invalid_argument("PGN needs the hessian_at operator");
    }
    if (projected) y = project_bounds(std::move(y), bounds);

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();

    RunReport rep;
    Vector grad;
    double e = f.value_and_gradient(y, grad);
    const double e0 = e;
    auto rof_of = [&](double v) { return e0 != 0.0 ? v / e0 : 1.0; };
    auto re_of = [&](const Vector& x) { return f.relative_error ? f.relative_error(x) : nan; };
    rep.rows.push_back({0, e, rof_of(e), re_of(y), 0.0, 0, elapsed()});

    LbfgsMemory mem;
    mem.capacity = cfg.lbfgs_memory;
    double prev_eta = 1.0;
    int prev_backtracks = 0;
    bool have_prev = false;
    rep.reason = StopReason::MaxIterations;

    for (int it = 1; it <= cfg.max_iter; ++it) {
        Vector p;
        Vector gp;  // projected gradient (projected methods only)
        if (projected) gp = projected_gradient(y, grad, bounds);
        switch (cfg.method) {
            case Method::GD:
                p = grad;
                scale(p, -1.0);
                break;
            case Method::PGD:
                p = gp;
                scale(p, -1.0);
                break;
            case Method::LBFGS:
                p = mem.direction(grad);
                if (dot(grad, p) >= 0.0) {  // rare stale-memory fallback
                    p = grad;
                    scale(p, -1.0);
                }
                break;
            case Method::GN: {
                if (f.newton_solve) {
                    f.newton_solve(y, grad, p);
                } else {
                    auto hess = f.hessian_at(y);
                    p = masked_cg_direction(hess, grad, std::vector<char>(y.size(), 0), cfg);
                }
                break;
            }
            case Method::PGN: {
                const std::vector<char> act = active_set(y, bounds);
                auto hess = f.hessian_at(y);
                p = masked_cg_direction(hess, grad, act, cfg);
                // Active coordinates move along the projected steepest descent,
                // scaled to the inactive step so neither part dominates.
                double p_inactive = 0.0, p_active = 0.0;
                for (std::size_t i = 0; i < p.size(); ++i) {
                    if (!act[i]) p_inactive = std::max(p_inactive, std::abs(p[i]));
                }
                Vector pa(y.size(), 0.0);
                for (std::size_t i = 0; i < y.size(); ++i) {
                    if (act[i]) {
                        pa[i] = -gp[i];
                        p_active = std::max(p_active, std::abs(pa[i]));
                    }
                }
                const double gamma = p_active > 0.0 ? p_inactive / p_active : 0.0;
                axpy(gamma, pa, p);
                break;
            }
        }

        const Vector& slope_grad = projected ? gp : grad;
        const double gdotp = dot(slope_grad, p);
        if (gauss_newton) {
            if (gdotp > 0.0) {
                rep.reason = StopReason::LineSearchFailure;
                break;
            }
            if (newton_decrement(slope_grad, p) < cfg.tol_newton_decrement) {
                rep.reason = StopReason::Decrement;
                break;
            }
        } else if (gdotp >= 0.0) {
            rep.reason = StopReason::LineSearchFailure;
            break;
        }

        const double eta0 =
            gauss_newton ? 1.0 : (have_prev ? adaptive_eta0(prev_eta, prev_backtracks) : 1.0);
        const LineSearchOutcome ls =
            armijo_search(f.value, y, p, e, gdotp, eta0, cfg, projected, bounds);
        if (!ls.success) {
            rep.reason = StopReason::LineSearchFailure;
            break;
        }
        prev_eta = ls.eta;
        prev_backtracks = ls.backtracks;
        have_prev = true;

        Vector y_new = ls.point;
        Vector grad_new;
        const double e_new = f.value_and_gradient(y_new, grad_new);
        double step = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = y_new[i] - y[i];
            step += d * d;
        }
        step = std::sqrt(step);
        const double delta_e = std::abs(e - e_new);

        if (cfg.method == Method::LBFGS) {
            Vector s(y.size()), dy(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) {
                s[i] = y_new[i] - y[i];
                dy[i] = grad_new[i] - grad[i];
            }
            mem.push(std::move(s), std::move(dy));
        }

        y = std::move(y_new);
        grad = std::move(grad_new);
        e = e_new;
        rep.rows.push_back({it, e, rof_of(e), re_of(y), step, ls.backtracks, elapsed()});

        if (delta_e < cfg.tol_obj_change && step < cfg.tol_step_norm) {
            rep.reason = StopReason::ObjectiveAndStep;
            break;
        }
    }

    rep.iterations = static_cast<int>(rep.rows.size()) - 1;
    rep.total_seconds = elapsed();
    rep.min_rof = rep.rows.front().rof;
    rep.min_re = rep.rows.front().re;
    double ls_sum = 0.0;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) ls_sum += rep.rows[i].ls_iters;
    rep.mean_ls_iters = rep.iterations > 0 ? ls_sum / rep.iterations : 0.0;
    for (const auto& r : rep.rows) {
        rep.min_rof = std::min(rep.min_rof, r.rof);
        if (!std::isnan(r.re) && (std::isnan(rep.min_re) || r.re < rep.min_re)) {
            rep.min_re = r.re;
        }
    }
    return rep;
}

void write_report_csv(const std::string& path, const RunReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "iter,objective,rof,re,step_norm,ls_iters,cum_seconds\n";
    char buf[256];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d,%.6f\n", r.iter,
                      r.objective, r.rof, r.re, r.step_norm, r.ls_iters, r.cum_seconds);
        out << buf;
    }
}

}  // namespace bispect
