#pragma once

#include <functional>
#include <memory>

#include "bispect/bispectrum.hpp"
#include "bispect/fft.hpp"
#include "bispect/phase_index.hpp"
#include "bispect/sparse.hpp"
#include "bispect/vec.hpp"

namespace bispect {

/// E1: least squares on the wrapped phase residual; E2: least squares on the
/// (cos, sin) pair, which removes the wrap discontinuity.
enum class Variant { E1, E2 };

enum class Regularizer { None, Penalty, DiscreteGradient, TotalVariation };

// ---------------------------------------------------------------------------
// Phase-space objectives
// ---------------------------------------------------------------------------

/// Weighted nonlinear least squares in the unknown phase vector.
/// E1(phi) = 1/2 ||W^(1/2) wrap(beta - A phi)||^2; the modulo is ignored when
/// differentiating, so grad = -A^T W wrap(beta - A phi) and the Gauss-Newton
/// Hessian is the constant A^T W A.
/// E2(phi) = 1/2 ||W^(1/2)(cos beta - cos A phi)||^2
///         + 1/2 ||W^(1/2)(sin beta - sin A phi)||^2, grad = A^T W d1 with
/// d1 = cos beta . sin A phi - sin beta . cos A phi; the d2 curvature diagonal is
/// omitted from the Gauss-Newton Hessian (it is 1 at zero residual), so both
/// variants share one A^T W A factorization.
class PhaseObjective {
public:
    PhaseObjective(const BispectrumIndex& index, Vector beta, Vector weights, Variant variant);

    double value(const Vector& phi) const;
    double value_and_gradient(const Vector& phi, Vector& grad) const;

    /// E2 diagnostics from the most recent value_and_gradient call.
    const Vector& last_d1() const { return d1_; }
    const Vector& last_d2() const { return d2_; }
    /// Wrapped residual wrap(beta - A phi) at a point (diagnostic).
    Vector wrapped_residual(const Vector& phi) const;

    const SparseCSR& normal_matrix() const;
    /// Direct inexact Newton step p = -(P^T H P ~ LL^T)^(-1) grad through the
    /// permute/truncate/ichol pipeline. The factorization is built on first use
    /// (setup phase; not concurrency-safe) and reused for the rest of the run.
    void newton_step(const Vector& grad, Vector& p) const;
    int factorization_count() const { return factorization_count_; }
    const GNFactorization& factorization() const;

    const BispectrumIndex& index() const { return *index_; }
    const Vector& beta() const { return beta_; }
    const Vector& weights() const { return weights_; }
    Variant variant() const { return variant_; }

private:
    const BispectrumIndex* index_;
    Vector beta_, weights_;
    Variant variant_;
    Vector cos_beta_, sin_beta_;
    mutable Vector d1_, d2_;
    mutable SparseCSR normal_;
    mutable std::unique_ptr<GNFactorization> factorization_;
    mutable int factorization_count_ = 0;
};

// ---------------------------------------------------------------------------
// Fourier phase of an image and its Jacobian
// ---------------------------------------------------------------------------

/// FFT of an image with phase sampling on the indexed frequency set. phi_k is the
/// four-quadrant angle of (FFT o) at the representative coordinate (0 where the
/// transform vanishes). The Jacobian action is Im(FFT(q) / FFT(o)) sampled on the
/// set; its adjoint scatters r_k / FFT(o)_k onto the grid and takes Im(FFT(.)).
class ObjectSpectrum {
public:
    ObjectSpectrum(const Vector& o, const PhaseIndexMap& map);

    Vector phase() const;
    Vector jacobian_apply(const Vector& q) const;
    Vector jacobian_adjoint(const Vector& r) const;

    const ComplexGrid& grid() const { return fo_; }

private:
    const PhaseIndexMap* map_;
    ComplexGrid fo_;
};

Vector phase_of_object(const Vector& o, const PhaseIndexMap& map);
Vector dphi_do_forward(const Vector& o, const Vector& q, const PhaseIndexMap& map);
Vector dphi_do_adjoint(const Vector& o, const Vector& r, const PhaseIndexMap& map);

// ---------------------------------------------------------------------------
// Regularizers
// ---------------------------------------------------------------------------

struct RegEval {
    double value = 0.0;
    Vector gradient;
    /// Symmetric positive semidefinite curvature action at the evaluation point
    /// (lagged diffusivity for total variation). Includes the alpha factor.
    std::function<void(const Vector&, Vector&)> hess_action;
};

/// Negativity penalty alpha/2 * sum min(o, 0)^2 (image shape irrelevant).
RegEval reg_penalty(const Vector& o, double alpha);
/// Smoothness alpha/2 * ||grad_h o||^2 with forward differences and replicate
/// (Neumann) boundaries on a rows x cols grid.
RegEval reg_discrete_gradient(const Vector& o, double alpha, int rows, int cols);
/// Smoothed total variation alpha * sum sqrt(|grad_h o|^2 + eps^2); eps > 0 required.
RegEval reg_total_variation(const Vector& o, double alpha, double eps, int rows, int cols);

RegEval eval_regularizer(Regularizer reg, const Vector& o, double alpha, double tv_eps, int rows,
                         int cols);

// ---------------------------------------------------------------------------
// Image-space objectives
// ---------------------------------------------------------------------------

/// E(o) = E_data(phi(o)) + alpha R(o), composing a phase objective with the Fourier
/// phase of the image restricted to the indexed set.
class ImageObjective {
public:
    ImageObjective(const BispectrumIndex& index, Vector beta, Vector weights, Variant variant,
                   Regularizer reg, double alpha, double tv_eps);

    double value(const Vector& o) const;
    double value_and_gradient(const Vector& o, Vector& grad) const;

    /// Gauss-Newton curvature J^T A^T W A J + alpha hess(R) at the base point;
    /// with include_d2, W is replaced by W D2 (may lose positive definiteness).
    struct Hessian {
        std::shared_ptr<const ObjectSpectrum> spectrum;
        const SparseCSR* A = nullptr;
        Vector row_scale;  // w (optionally times d2)
        std::function<void(const Vector&, Vector&)> reg_hess;
        void apply(const Vector& v, Vector& out) const;
    };
    Hessian hessian_at(const Vector& o) const;

    bool include_d2 = false;

    const PhaseObjective& data_term() const { return data_; }
    Regularizer regularizer() const { return reg_; }
    double alpha() const { return alpha_; }
    double tv_eps() const { return tv_eps_; }
    int image_side() const { return data_.index().map.image_side(); }

private:
    PhaseObjective data_;
    Regularizer reg_;
    double alpha_;
    double tv_eps_;
};

}  // namespace bispect
