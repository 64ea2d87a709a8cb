#include "bispect/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace bispect {

namespace {

void check_weights(const Vector& w) {
    for (double x : w) {
        if (!(x > 0.0)) throw std::invalid_argument("objective weights must be positive");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// PhaseObjective
// ---------------------------------------------------------------------------

PhaseObjective::PhaseObjective(const BispectrumIndex& index, Vector beta, Vector weights,
                               Variant variant)
    : index_(&index), beta_(std::move(beta)), weights_(std::move(weights)), variant_(variant) {
    const std::size_t m = index.m();
    if (beta_.size() != m || weights_.size() != m) {
        throw std::invalid_argument("beta/weights size does not match the triplet count");
    }
    check_weights(weights_);
    if (variant_ == Variant::E2) {
        cos_beta_.resize(m);
        sin_beta_.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            cos_beta_[k] = std::cos(beta_[k]);
            sin_beta_[k] = std::sin(beta_[k]);
        }
    }
}

Vector PhaseObjective::wrapped_residual(const Vector& phi) const {
    Vector aphi;
    spmv(index_->A, phi, aphi);
    for (std::size_t k = 0; k < aphi.size(); ++k) aphi[k] = wrap_phase(beta_[k] - aphi[k]);
    return aphi;
}

double PhaseObjective::value(const Vector& phi) const {
    if (phi.size() != static_cast<std::size_t>(index_->n())) {
        throw std::invalid_argument("phase vector has wrong length");
    }
    Vector aphi;
    spmv(index_->A, phi, aphi);
    double v = 0.0;
    if (variant_ == Variant::E1) {
        for (std::size_t k = 0; k < aphi.size(); ++k) {
            const double r = wrap_phase(beta_[k] - aphi[k]);
            v += 0.5 * weights_[k] * r * r;
        }
    } else {
        for (std::size_t k = 0; k < aphi.size(); ++k) {
            const double dc = cos_beta_[k] - std::cos(aphi[k]);
            const double ds = sin_beta_[k] - std::sin(aphi[k]);
            v += 0.5 * weights_[k] * (dc * dc + ds * ds);
        }
    }
    return v;
}

double PhaseObjective::value_and_gradient(const Vector& phi, Vector& grad) const {
    if (phi.size() != static_cast<std::size_t>(index_->n())) {
        throw std::invalid_argument("phase vector has wrong length");
    }
    Vector aphi;
    spmv(index_->A, phi, aphi);
    const std::size_t m = aphi.size();
    Vector t(m);
    double v = 0.0;
    if (variant_ == Variant::E1) {
        for (std::size_t k = 0; k < m; ++k) {
            const double r = wrap_phase(beta_[k] - aphi[k]);
            v += 0.5 * weights_[k] * r * r;
            t[k] = -weights_[k] * r;
        }
    } else {
        d1_.resize(m);
        d2_.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            const double ca = std::cos(aphi[k]);
            const double sa = std::sin(aphi[k]);
            const double dc = cos_beta_[k] - ca;
            const double ds = sin_beta_[k] - sa;
            v += 0.5 * weights_[k] * (dc * dc + ds * ds);
            d1_[k] = cos_beta_[k] * sa - sin_beta_[k] * ca;
            d2_[k] = cos_beta_[k] * ca + sin_beta_[k] * sa;
            t[k] = weights_[k] * d1_[k];
        }
    }
    spmv_transpose(index_->A, t, grad);
    return v;
}

const SparseCSR& PhaseObjective::normal_matrix() const {
    if (normal_.n_rows == 0) normal_ = form_normal_matrix(index_->A, weights_);
    return normal_;
}

const GNFactorization& PhaseObjective::factorization() const {
    if (!factorization_) {
        factorization_ =
            std::make_unique<GNFactorization>(build_gn_factorization(normal_matrix()));
        ++factorization_count_;
    }
    return *factorization_;
}

void PhaseObjective::newton_step(const Vector& grad, Vector& p) const {
    Vector rhs(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) rhs[i] = -grad[i];
    factorization().solve(rhs, p);
}

// ---------------------------------------------------------------------------
// ObjectSpectrum
// ---------------------------------------------------------------------------

ObjectSpectrum::ObjectSpectrum(const Vector& o, const PhaseIndexMap& map) : map_(&map) {
    const int n = map.image_side();
    if (o.size() != static_cast<std::size_t>(n) * n) {
        throw std::invalid_argument("object size does not match the grid");
    }
    fo_ = fft2_of_real(o, n, n);
}

Vector ObjectSpectrum::phase() const {
    const int n = map_->size();
    Vector phi(n);
    for (int k = 0; k < n; ++k) {
        const FreqCoord c = map_->representative(k);
        const Complex z = fo_.at_freq(c.i, c.j);
        phi[k] = (z.real() == 0.0 && z.imag() == 0.0) ? 0.0
                                                      : wrap_phase(std::atan2(z.imag(), z.real()));
    }
    return phi;
}

Vector ObjectSpectrum::jacobian_apply(const Vector& q) const {
    const int side = map_->image_side();
    if (q.size() != static_cast<std::size_t>(side) * side) {
        throw std::invalid_argument("perturbation size does not match the grid");
    }
    const ComplexGrid fq = fft2_of_real(q, side, side);
    const int n = map_->size();
    Vector out(n);
    for (int k = 0; k < n; ++k) {
        const FreqCoord c = map_->representative(k);
        const Complex z = fo_.at_freq(c.i, c.j);
        const double den = std::norm(z);
        if (den == 0.0) {
            out[k] = 0.0;
            continue;
        }
        const Complex fqk = fq.at_freq(c.i, c.j);
        out[k] = (fqk.imag() * z.real() - fqk.real() * z.imag()) / den;
    }
    return out;
}

Vector ObjectSpectrum::jacobian_adjoint(const Vector& r) const {
    const int n = map_->size();
    if (r.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("cotangent size does not match the index");
    }
    const int side = map_->image_side();
    ComplexGrid scatter(side, side);
    for (int k = 0; k < n; ++k) {
        if (r[k] == 0.0) continue;
        const FreqCoord c = map_->representative(k);
        const Complex z = fo_.at_freq(c.i, c.j);
        const double den = std::norm(z);
        if (den == 0.0) continue;
        scatter.at_freq(c.i, c.j) = r[k] * std::conj(z) / den;
    }
    fft2_forward(scatter);
    Vector out(static_cast<std::size_t>(side) * side);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scatter.data[i].imag();
    return out;
}

Vector phase_of_object(const Vector& o, const PhaseIndexMap& map) {
    return ObjectSpectrum(o, map).phase();
}

Vector dphi_do_forward(const Vector& o, const Vector& q, const PhaseIndexMap& map) {
    return ObjectSpectrum(o, map).jacobian_apply(q);
}

Vector dphi_do_adjoint(const Vector& o, const Vector& r, const PhaseIndexMap& map) {
    return ObjectSpectrum(o, map).jacobian_adjoint(r);
}

// ---------------------------------------------------------------------------
// Regularizers
// ---------------------------------------------------------------------------

namespace {

void check_grid(const Vector& o, int rows, int cols) {
    if (rows < 1 || cols < 1 || o.size() != static_cast<std::size_t>(rows) * cols) {
        throw std::invalid_argument("image size does not match rows x cols");
    }
}

// Forward differences with replicate boundaries: the last column/row of dx/dy is 0.
void grad_forward(const Vector& o, int rows, int cols, Vector& dx, Vector& dy) {
    dx.assign(o.size(), 0.0);
    dy.assign(o.size(), 0.0);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const std::size_t p = static_cast<std::size_t>(i) * cols + j;
            if (j + 1 < cols) dx[p] = o[p + 1] - o[p];
            if (i + 1 < rows) dy[p] = o[p + cols] - o[p];
        }
    }
}

// Exact adjoint of grad_forward (negative divergence with matching boundaries).
void grad_adjoint(const Vector& dx, const Vector& dy, int rows, int cols, Vector& out) {
    out.assign(dx.size(), 0.0);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const std::size_t p = static_cast<std::size_t>(i) * cols + j;
            double v = 0.0;
            if (j > 0) v += dx[p - 1];
            if (j + 1 < cols) v -= dx[p];
            if (i > 0) v += dy[p - cols];
            if (i + 1 < rows) v -= dy[p];
            out[p] = v;
        }
    }
}

}  // namespace

RegEval reg_penalty(const Vector& o, double alpha) {
    RegEval e;
    e.gradient.resize(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double neg = std::min(o[i], 0.0);
        e.value += 0.5 * alpha * neg * neg;
        e.gradient[i] = alpha * neg;
    }
    std::vector<char> active(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) active[i] = o[i] < 0.0;
    e.hess_action = [alpha, active = std::move(active)](const Vector& v, Vector& out) {
        out.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = active[i] ? alpha * v[i] : 0.0;
    };
    return e;
}

RegEval reg_discrete_gradient(const Vector& o, double alpha, int rows, int cols) {
    check_grid(o, rows, cols);
    RegEval e;
    Vector dx, dy;
    grad_forward(o, rows, cols, dx, dy);
    for (std::size_t p = 0; p < o.size(); ++p) {
        e.value += 0.5 * alpha * (dx[p] * dx[p] + dy[p] * dy[p]);
    }
    grad_adjoint(dx, dy, rows, cols, e.gradient);
    scale(e.gradient, alpha);
    e.hess_action = [alpha, rows, cols](const Vector& v, Vector& out) {
        Vector vx, vy;
        grad_forward(v, rows, cols, vx, vy);
        grad_adjoint(vx, vy, rows, cols, out);
        scale(out, alpha);
    };
    return e;
}

RegEval reg_total_variation(const Vector& o, double alpha, double eps, int rows, int cols) {
    check_grid(o, rows, cols);
    if (!(eps > 0.0)) throw std::invalid_argument("total variation smoothing eps must be positive");
    RegEval e;
    Vector dx, dy;
    grad_forward(o, rows, cols, dx, dy);
    Vector psi(o.size());
    for (std::size_t p = 0; p < o.size(); ++p) {
        psi[p] = std::sqrt(dx[p] * dx[p] + dy[p] * dy[p] + eps * eps);
        e.value += alpha * psi[p];
        dx[p] /= psi[p];
        dy[p] /= psi[p];
    }
    grad_adjoint(dx, dy, rows, cols, e.gradient);
    scale(e.gradient, alpha);
    // Lagged diffusivity: freeze 1/psi at the base point, keeping the action SPD.
    e.hess_action = [alpha, rows, cols, psi = std::move(psi)](const Vector& v, Vector& out) {
        Vector vx, vy;
        grad_forward(v, rows, cols, vx, vy);
        for (std::size_t p = 0; p < v.size(); ++p) {
            vx[p] /= psi[p];
            vy[p] /= psi[p];
        }
        grad_adjoint(vx, vy, rows, cols, out);
        scale(out, alpha);
    };
    return e;
}

RegEval eval_regularizer(Regularizer reg, const Vector& o, double alpha, double tv_eps, int rows,
                         int cols) {
    switch (reg) {
        case Regularizer::None: {
            RegEval e;
            e.gradient.assign(o.size(), 0.0);
            e.hess_action = [](const Vector& v, Vector& out) { out.assign(v.size(), 0.0); };
            return e;
        }
        case Regularizer::Penalty:
            return reg_penalty(o, alpha);
        case Regularizer::DiscreteGradient:
            return reg_discrete_gradient(o, alpha, rows, cols);
        case Regularizer::TotalVariation:
            return reg_total_variation(o, alpha, tv_eps, rows, cols);
    }
    throw std::invalid_argument("unknown regularizer");
}

// ---------------------------------------------------------------------------
// ImageObjective
// ---------------------------------------------------------------------------

ImageObjective::ImageObjective(const BispectrumIndex& index, Vector beta, Vector weights,
                               Variant variant, Regularizer reg, double alpha, double tv_eps)
    : data_(index, std::move(beta), std::move(weights), variant),
      reg_(reg),
      alpha_(alpha),
      tv_eps_(tv_eps) {
    if (reg_ == Regularizer::TotalVariation && !(tv_eps_ > 0.0)) {
        throw std::invalid_argument("total variation smoothing eps must be positive");
    }
}

double ImageObjective::value(const Vector& o) const {
    const ObjectSpectrum spec(o, data_.index().map);
    const int side = image_side();
    double v = data_.value(spec.phase());
    if (reg_ != Regularizer::None) {
        v += eval_regularizer(reg_, o, alpha_, tv_eps_, side, side).value;
    }
    return v;
}

double ImageObjective::value_and_gradient(const Vector& o, Vector& grad) const {
    const ObjectSpectrum spec(o, data_.index().map);
    const int side = image_side();
    Vector grad_phi;
    double v = data_.value_and_gradient(spec.phase(), grad_phi);
    grad = spec.jacobian_adjoint(grad_phi);
    if (reg_ != Regularizer::None) {
        RegEval r = eval_regularizer(reg_, o, alpha_, tv_eps_, side, side);
        v += r.value;
        axpy(1.0, r.gradient, grad);
    }
    return v;
}

void ImageObjective::Hessian::apply(const Vector& v, Vector& out) const {
    Vector t = spectrum->jacobian_apply(v);
    Vector a, s;
    spmv(*A, t, a);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] *= row_scale[k];
    spmv_transpose(*A, a, s);
    out = spectrum->jacobian_adjoint(s);
    if (reg_hess) {
        Vector tmp;
        reg_hess(v, tmp);
        axpy(1.0, tmp, out);
    }
}

ImageObjective::Hessian ImageObjective::hessian_at(const Vector& o) const {
    Hessian h;
    h.spectrum = std::make_shared<ObjectSpectrum>(o, data_.index().map);
    h.A = &data_.index().A;
    h.row_scale = data_.weights();
    if (include_d2 && data_.variant() == Variant::E2) {
        Vector grad_phi;
        data_.value_and_gradient(h.spectrum->phase(), grad_phi);
        const Vector& d2 = data_.last_d2();
        for (std::size_t k = 0; k < h.row_scale.size(); ++k) h.row_scale[k] *= d2[k];
    }
    if (reg_ != Regularizer::None) {
        const int side = image_side();
        h.reg_hess = eval_regularizer(reg_, o, alpha_, tv_eps_, side, side).hess_action;
    }
    return h;
}

}  // namespace bispect
