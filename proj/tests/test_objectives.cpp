// Objective values, gradients, and curvature models.
//   - E1/E2 phase objectives on a hand-built two-unknown operator: frozen values,
//     gradient identities, 2*pi periodicity, shared normal matrix
//   - finite-difference gradient checks (E1 at wrap-safe points)
//   - Fourier phase of an image: known angles, Jacobian vs. finite differences,
//     adjoint identity, scale invariance of the phase
//   - regularizers: hand-worked values/gradients, Laplacian stencil, lagged
//     curvature identities, SPD probes
//   - image objective: composition, Hessian symmetry and semidefiniteness
#include <doctest.h>

#include <bispect/objectives.hpp>
#include <bispect/rng.hpp>

#include "support/oracles.hpp"

#include <cmath>

using namespace bispect;

namespace {

// Two-unknown phase operator with rows phi_0 and phi_0 (A = [1; 1] on index 0),
// carried by a real index so the objective sees consistent metadata.
BispectrumIndex toy_index() {
    BispectrumIndex index;
    index.map = build_phase_map(16, 1.0);  // representatives (0,1) and (1,0)
    REQUIRE(index.map.size() == 2);
    index.inner_radius = 1.0;
    index.triplets.resize(2);
    index.A = csr_from_triplets(2, 2, {0, 1}, {0, 0}, {1.0, 1.0});
    return index;
}

double fd_value(const std::function<double(const Vector&)>& f, Vector y, int k, double h) {
    y[k] += h;
    const double fp = f(y);
    y[k] -= 2 * h;
    const double fm = f(y);
    return (fp - fm) / (2 * h);
}

Vector smooth_image(int n, unsigned seed) {
    RandomStream rs(seed, 0, 0);
    Vector o(n * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            o[r * n + c] = 1.0 + 0.3 * std::sin(2.0 * M_PI * r / n) +
                           0.2 * std::cos(2.0 * M_PI * c / n) + 0.01 * rs.gaussian();
    return o;
}

}  // namespace

TEST_CASE("E1 value and gradient on the two-row toy operator") {
    // beta = (0, pi/2), phi = 0: residuals wrap(beta - A phi) = (0, pi/2),
    // E1 = 1/2 (0 + pi^2/4) = pi^2/8, grad = -A^T wrap = (-pi/2, 0).
    const BispectrumIndex index = toy_index();
    const PhaseObjective e1(index, {0.0, M_PI / 2}, {1.0, 1.0}, Variant::E1);
    Vector grad;
    const double v = e1.value_and_gradient({0.0, 0.0}, grad);
    CHECK(v == doctest::Approx(M_PI * M_PI / 8).epsilon(1e-15));
    CHECK(grad[0] == doctest::Approx(-M_PI / 2).epsilon(1e-15));
    CHECK(grad[1] == 0.0);
    CHECK(e1.value({0.0, 0.0}) == doctest::Approx(v).epsilon(1e-15));

    // Weights scale both quadratically (value) and linearly (gradient).
    const PhaseObjective e1w(index, {0.0, M_PI / 2}, {3.0, 5.0}, Variant::E1);
    Vector gw;
    const double vw = e1w.value_and_gradient({0.0, 0.0}, gw);
    CHECK(vw == doctest::Approx(5.0 * M_PI * M_PI / 8).epsilon(1e-14));
    CHECK(gw[0] == doctest::Approx(-5.0 * M_PI / 2).epsilon(1e-14));
}

TEST_CASE("E2 equals the weighted cosine deficit sum") {
    const BispectrumIndex index = toy_index();
    RandomStream rs(3, 0, 0);
    const Vector beta{0.7, -2.1};
    const Vector w{0.4, 2.5};
    const PhaseObjective e2(index, beta, w, Variant::E2);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector phi{rs.gaussian(), rs.gaussian()};
        Vector aphi(2);
        spmv(index.A, phi, aphi);
        double want = 0.0;
        for (int r = 0; r < 2; ++r) want += w[r] * (1.0 - std::cos(aphi[r] - beta[r]));
        CHECK(e2.value(phi) == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("E2 diagnostics vanish or saturate at zero residual") {
    // One-row operator so A phi = beta is attainable exactly.
    BispectrumIndex row;
    row.map = build_phase_map(16, 1.0);
    row.inner_radius = 1.0;
    row.triplets.resize(1);
    row.A = csr_from_triplets(1, 2, {0}, {0}, {1.0});
    const PhaseObjective single(row, {0.9}, {1.0}, Variant::E2);
    Vector grad;
    const double v = single.value_and_gradient({0.9, 0.0}, grad);
    CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(grad[0]) < 1e-14);
    CHECK(single.last_d1()[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(single.last_d2()[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("both variants are 2*pi periodic in every unknown") {
    const BispectrumIndex index = toy_index();
    const Vector beta{0.7, -2.1};
    for (Variant variant : {Variant::E1, Variant::E2}) {
        const PhaseObjective f(index, beta, {1.0, 2.0}, variant);
        const Vector phi{0.35, -0.8};
        const double v = f.value(phi);
        for (int k : {-2, 1, 4}) {
            Vector shifted = phi;
            shifted[0] += 2.0 * M_PI * k;
            CHECK(f.value(shifted) == doctest::Approx(v).epsilon(1e-10));
            shifted = phi;
            shifted[1] += 2.0 * M_PI * k;
            CHECK(f.value(shifted) == doctest::Approx(v).epsilon(1e-10));
        }
    }
}

TEST_CASE("phase objective gradients pass finite differences") {
    const PhaseIndexMap map = build_phase_map(16, 4.0);
    const BispectrumIndex index = build_index(map, 2.0);
    RandomStream rs(13, 0, 0);
    Vector beta(index.m()), w(index.m());
    for (double& b : beta) b = wrap_phase(2.0 * rs.gaussian());
    for (double& x : w) x = 0.2 + rs.uniform();

    for (Variant variant : {Variant::E1, Variant::E2}) {
        const PhaseObjective f(index, beta, w, variant);
        Vector phi(index.n());
        if (variant == Variant::E1) {
            // Wrap-safe point: keep every residual well inside (-pi, pi).
            for (int k = 0; k < index.n(); ++k) phi[k] = 0.02 * rs.gaussian();
        } else {
            for (int k = 0; k < index.n(); ++k) phi[k] = rs.gaussian();
        }
        Vector grad;
        f.value_and_gradient(phi, grad);
        Vector dir(index.n());
        for (double& d : dir) d = rs.gaussian();
        const double slope = dot(grad, dir);
        const auto eval = [&](const Vector& y) { return f.value(y); };
        const oracle::FdSweep sweep = oracle::fd_directional(
            eval, slope, phi, dir, {1e-3, 1e-4, 1e-5, 1e-6});
        CHECK(sweep.pass(1.8));
    }
}

TEST_CASE("normal matrix is shared and factored once across newton steps") {
    const PhaseIndexMap map = build_phase_map(16, 4.0);
    const BispectrumIndex index = build_index(map, 2.0);
    RandomStream rs(19, 0, 0);
    Vector beta(index.m()), w(index.m());
    for (double& b : beta) b = wrap_phase(rs.gaussian());
    for (double& x : w) x = 0.5 + rs.uniform();

    const PhaseObjective e1(index, beta, w, Variant::E1);
    const PhaseObjective e2(index, beta, w, Variant::E2);
    // Same A^T W A irrespective of variant.
    const SparseCSR& h1 = e1.normal_matrix();
    const SparseCSR& h2 = e2.normal_matrix();
    REQUIRE(h1.nnz() == h2.nnz());
    for (int k = 0; k < h1.nnz(); ++k)
        CHECK(h1.values[k] == doctest::Approx(h2.values[k]).epsilon(1e-14));

    CHECK(e1.factorization_count() == 0);
    Vector grad(index.n()), p;
    for (int k = 0; k < index.n(); ++k) grad[k] = rs.gaussian();
    e1.newton_step(grad, p);
    e1.newton_step(grad, p);
    Vector g2 = grad;
    scale(g2, 0.5);
    e1.newton_step(g2, p);
    CHECK(e1.factorization_count() == 1);
}

TEST_CASE("newton_step solves the normal system on its active block") {
    const PhaseIndexMap map = build_phase_map(16, 3.0);
    const BispectrumIndex index = build_index(map, 2.0);
    RandomStream rs(23, 0, 0);
    Vector beta(index.m()), w(index.m(), 1.0);
    for (double& b : beta) b = wrap_phase(rs.gaussian());
    const PhaseObjective e1(index, beta, w, Variant::E1);
    // Objective gradients always lie in range(A^T), never in the two-dimensional
    // ramp null space of A^T W A; a raw random vector would carry an irreducible
    // null-space residual and say nothing about the solver. Build one the way the
    // optimizer does.
    Vector r(index.m()), grad, p;
    for (double& x : r) x = rs.gaussian();
    spmv_transpose(index.A, r, grad);
    e1.newton_step(grad, p);
    // p approximately solves H p = -grad; ichol(0) is inexact, so allow slack, but
    // the direction must be a strong descent direction.
    Vector hp(index.n());
    spmv(e1.normal_matrix(), p, hp);
    axpy(1.0, grad, hp);  // hp = H p + grad, ideally 0
    CHECK(norm2(hp) < 0.5 * norm2(grad));
    CHECK(dot(grad, p) < 0.0);
}

TEST_CASE("image phase reproduces known spectra") {
    const int n = 16;
    const PhaseIndexMap map = build_phase_map(n, 4.0);
    // Delta at the origin: zero phase everywhere.
    Vector delta(n * n, 0.0);
    delta[0] = 3.0;
    const Vector p0 = phase_of_object(delta, map);
    for (double v : p0) CHECK(std::abs(v) < 1e-13);

    // Shifted delta at (r0, c0): phase(f) = -2*pi*(f . x0)/n, wrapped.
    const int r0 = 2, c0 = 5;
    Vector shifted(n * n, 0.0);
    shifted[r0 * n + c0] = 1.0;
    const Vector ps = phase_of_object(shifted, map);
    for (int k = 0; k < map.size(); ++k) {
        const FreqCoord f = map.representative(k);
        const double want = wrap_phase(-2.0 * M_PI * (f.i * r0 + f.j * c0) / n);
        CHECK(wrap_phase(ps[k] - want) == doctest::Approx(0.0).epsilon(1e-12));
    }

    // Positive scaling leaves the phase untouched.
    RandomStream rs(29, 0, 0);
    Vector img(n * n);
    for (double& x : img) x = 0.1 + rs.uniform();
    Vector doubled = img;
    scale(doubled, 2.0);
    const Vector pa = phase_of_object(img, map);
    const Vector pb = phase_of_object(doubled, map);
    for (int k = 0; k < map.size(); ++k)
        CHECK(pa[k] == doctest::Approx(pb[k]).epsilon(1e-14));
}

TEST_CASE("phase Jacobian matches finite differences with wrapping") {
    const int n = 16;
    const PhaseIndexMap map = build_phase_map(n, 4.0);
    const Vector o = smooth_image(n, 31);
    RandomStream rs(37, 0, 0);
    Vector q(n * n);
    for (double& x : q) x = rs.gaussian();
    const Vector jq = dphi_do_forward(o, q, map);
    const double h = 1e-6;
    Vector op = o, om = o;
    axpy(h, q, op);
    axpy(-h, q, om);
    const Vector pp = phase_of_object(op, map);
    const Vector pm = phase_of_object(om, map);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < map.size(); ++k) {
        const double fd = wrap_phase(pp[k] - pm[k]) / (2 * h);
        num += (fd - jq[k]) * (fd - jq[k]);
        den += jq[k] * jq[k];
    }
    // Central differences at h = 1e-6 leave O(h^2) truncation plus round-off
    // amplified by weak spectral bins; 1e-6 relative over the whole set is the
    // realistic agreement level.
    CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("phase Jacobian and its adjoint satisfy the inner-product identity") {
    const int n = 16;
    const PhaseIndexMap map = build_phase_map(n, 5.0);
    RandomStream rs(41, 0, 0);
    for (int trial = 0; trial < 5; ++trial) {
        Vector o(n * n), q(n * n), r(map.size());
        for (double& x : o) x = 0.5 + rs.uniform();
        for (double& x : q) x = rs.gaussian();
        for (double& x : r) x = rs.gaussian();
        const Vector jq = dphi_do_forward(o, q, map);
        const Vector jtr = dphi_do_adjoint(o, r, map);
        const double lhs = dot(jq, r), rhs = dot(q, jtr);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * norm2(q) * norm2(r));
    }
    // Both maps are linear in their vector argument.
    Vector o(n * n), q1(n * n), q2(n * n);
    for (double& x : o) x = 0.5 + rs.uniform();
    for (double& x : q1) x = rs.gaussian();
    for (double& x : q2) x = rs.gaussian();
    Vector qsum = q1;
    axpy(2.0, q2, qsum);
    const Vector lhs = dphi_do_forward(o, qsum, map);
    Vector rhs = dphi_do_forward(o, q1, map);
    axpy(2.0, dphi_do_forward(o, q2, map), rhs);
    for (int k = 0; k < map.size(); ++k)
        CHECK(lhs[k] == doctest::Approx(rhs[k]).epsilon(1e-11));
}

TEST_CASE("negativity penalty: frozen example and one-sided activity") {
    const double alpha = 7.0;
    const RegEval r = reg_penalty({-2.0, 3.0}, alpha);
    CHECK(r.value == doctest::Approx(alpha / 2 * 4.0).epsilon(1e-15));
    CHECK(r.gradient[0] == doctest::Approx(-2.0 * alpha).epsilon(1e-15));
    CHECK(r.gradient[1] == 0.0);
    // Curvature acts only on the negative coordinates.
    Vector hv;
    r.hess_action({1.0, 1.0}, hv);
    CHECK(hv[0] == doctest::Approx(alpha).epsilon(1e-15));
    CHECK(hv[1] == 0.0);
    // Entirely nonnegative input: identically zero.
    const RegEval rz = reg_penalty({0.0, 1.0, 2.0}, alpha);
    CHECK(rz.value == 0.0);
    CHECK(norm2(rz.gradient) == 0.0);
}

TEST_CASE("discrete-gradient energy: stripe value and Laplacian stencil") {
    const double alpha = 3.0;
    // 1x2 image (0, 1): one forward difference of 1, value alpha/2.
    const RegEval r = reg_discrete_gradient({0.0, 1.0}, alpha, 1, 2);
    CHECK(r.value == doctest::Approx(alpha / 2).epsilon(1e-15));
    CHECK(r.gradient[0] == doctest::Approx(-alpha).epsilon(1e-15));
    CHECK(r.gradient[1] == doctest::Approx(alpha).epsilon(1e-15));

    // Constant image: value and gradient vanish under Neumann boundaries.
    const RegEval rc = reg_discrete_gradient(Vector(5 * 7, 2.5), alpha, 5, 7);
    CHECK(rc.value == 0.0);
    CHECK(norm2(rc.gradient) == 0.0);

    // Interior of the curvature is the 5-point Laplacian times alpha.
    const int n = 6;
    Vector delta(n * n, 0.0);
    delta[3 * n + 3] = 1.0;
    const RegEval rd = reg_discrete_gradient(Vector(n * n, 0.0), alpha, n, n);
    Vector hv;
    rd.hess_action(delta, hv);
    CHECK(hv[3 * n + 3] == doctest::Approx(4.0 * alpha).epsilon(1e-14));
    CHECK(hv[3 * n + 2] == doctest::Approx(-alpha).epsilon(1e-14));
    CHECK(hv[3 * n + 4] == doctest::Approx(-alpha).epsilon(1e-14));
    CHECK(hv[2 * n + 3] == doctest::Approx(-alpha).epsilon(1e-14));
    CHECK(hv[4 * n + 3] == doctest::Approx(-alpha).epsilon(1e-14));
}

TEST_CASE("total variation: constant image value and lagged curvature identity") {
    const double alpha = 2.0, eps = 0.05;
    const int rows = 4, cols = 5;
    const RegEval rc = reg_total_variation(Vector(rows * cols, 1.0), alpha, eps, rows, cols);
    CHECK(rc.value == doctest::Approx(alpha * eps * rows * cols).epsilon(1e-14));
    CHECK(norm2(rc.gradient) < 1e-14);

    // Lagged diffusivity: H(o) o == grad(o) since the energy density is 1-homogeneous
    // in the differences (up to the eps smoothing handled identically in both).
    const Vector o = smooth_image(6, 43);
    const RegEval r = reg_total_variation(o, alpha, eps, 6, 6);
    Vector ho;
    r.hess_action(o, ho);
    for (std::size_t k = 0; k < o.size(); ++k)
        CHECK(ho[k] == doctest::Approx(r.gradient[k]).epsilon(1e-10));

    CHECK_THROWS_AS(reg_total_variation(o, alpha, 0.0, 6, 6), std::invalid_argument);
    CHECK_THROWS_AS(reg_total_variation(o, alpha, -1.0, 6, 6), std::invalid_argument);
}

TEST_CASE("regularizer curvatures are symmetric positive semidefinite") {
    RandomStream rs(47, 0, 0);
    const int n = 5;
    Vector o(n * n);
    for (double& x : o) x = rs.gaussian();  // mixed signs exercise the penalty
    const double alpha = 1.7;
    for (Regularizer reg :
         {Regularizer::Penalty, Regularizer::DiscreteGradient, Regularizer::TotalVariation}) {
        const RegEval r = eval_regularizer(reg, o, alpha, 0.05, n, n);
        for (int probe = 0; probe < 8; ++probe) {
            Vector u(n * n), v(n * n), hu, hv;
            for (double& x : u) x = rs.gaussian();
            for (double& x : v) x = rs.gaussian();
            r.hess_action(u, hu);
            r.hess_action(v, hv);
            CHECK(dot(hu, v) == doctest::Approx(dot(u, hv)).epsilon(1e-10));
            CHECK(dot(hu, u) >= -1e-12 * dot(u, u));
        }
    }
}

TEST_CASE("regularizer gradients pass finite differences") {
    RandomStream rs(53, 0, 0);
    const int n = 6;
    Vector o(n * n);
    for (double& x : o) x = rs.gaussian();
    Vector dir(n * n);
    for (double& x : dir) x = rs.gaussian();
    const double alpha = 2.3;
    for (Regularizer reg :
         {Regularizer::Penalty, Regularizer::DiscreteGradient, Regularizer::TotalVariation}) {
        const RegEval at = eval_regularizer(reg, o, alpha, 0.1, n, n);
        const double slope = dot(at.gradient, dir);
        const auto eval = [&](const Vector& y) {
            return eval_regularizer(reg, y, alpha, 0.1, n, n).value;
        };
        const oracle::FdSweep sweep =
            oracle::fd_directional(eval, slope, o, dir, {1e-3, 1e-4, 1e-5, 1e-6});
        CHECK(sweep.pass(1.8));
    }
}

TEST_CASE("image objective composes the data term with the regularizer") {
    const int n = 16;
    const PhaseIndexMap map = build_phase_map(n, 4.0);
    const BispectrumIndex index = build_index(map, 2.0);
    const Vector o = smooth_image(n, 59);

    // Consistent data (beta from o itself) with alpha = 0: objective is zero.
    const ComplexGrid g = fft2_of_real(o, n, n);
    const BispectrumData data = accumulate_bispectrum({g}, index);
    const ImageObjective e1(index, data.beta, data.weights, Variant::E1,
                            Regularizer::None, 0.0, 0.0);
    CHECK(e1.value(o) < 1e-18);

    // With a regularizer, the value splits into data + alpha R exactly.
    const double alpha = 4.0;
    const ImageObjective e2tv(index, data.beta, data.weights, Variant::E2,
                              Regularizer::TotalVariation, alpha, 0.05);
    const PhaseObjective bare(index, data.beta, data.weights, Variant::E2);
    const Vector other = smooth_image(n, 61);
    const double want = bare.value(phase_of_object(other, map)) +
                        reg_total_variation(other, alpha, 0.05, n, n).value;
    CHECK(e2tv.value(other) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("image objective gradients pass finite differences") {
    const int n = 16;
    const PhaseIndexMap map = build_phase_map(n, 4.0);
    const BispectrumIndex index = build_index(map, 2.0);
    RandomStream rs(67, 0, 0);
    Vector beta(index.m()), w(index.m());
    for (double& b : beta) b = wrap_phase(rs.gaussian());
    for (double& x : w) x = 0.3 + rs.uniform();
    const Vector o = smooth_image(n, 71);
    Vector dir(n * n);
    for (double& x : dir) x = rs.gaussian();

    for (Variant variant : {Variant::E1, Variant::E2}) {
        for (Regularizer reg : {Regularizer::Penalty, Regularizer::TotalVariation}) {
            const ImageObjective f(index, beta, w, variant, reg, 2.0, 0.05);
            Vector grad;
            f.value_and_gradient(o, grad);
            const double slope = dot(grad, dir);
            const auto eval = [&](const Vector& y) { return f.value(y); };
            const oracle::FdSweep sweep =
                oracle::fd_directional(eval, slope, o, dir, {1e-3, 1e-4, 1e-5, 1e-6});
            CHECK(sweep.pass(1.8));
        }
    }
}

TEST_CASE("image Hessian action is symmetric and positive semidefinite") {
    const int n = 16;
    const PhaseIndexMap map = build_phase_map(n, 4.0);
    const BispectrumIndex index = build_index(map, 2.0);
    RandomStream rs(73, 0, 0);
    Vector beta(index.m()), w(index.m());
    for (double& b : beta) b = wrap_phase(rs.gaussian());
    for (double& x : w) x = 0.3 + rs.uniform();
    const ImageObjective f(index, beta, w, Variant::E2, Regularizer::TotalVariation,
                           1.5, 0.05);
    const Vector o = smooth_image(n, 79);
    const ImageObjective::Hessian h = f.hessian_at(o);
    for (int probe = 0; probe < 6; ++probe) {
        Vector u(n * n), v(n * n), hu, hv;
        for (double& x : u) x = rs.gaussian();
        for (double& x : v) x = rs.gaussian();
        h.apply(u, hu);
        h.apply(v, hv);
        CHECK(dot(hu, v) == doctest::Approx(dot(u, hv)).epsilon(1e-9));
        CHECK(dot(hu, u) >= -1e-10 * dot(u, u));
    }
}
