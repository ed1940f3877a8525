#include "phasecrb/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace phasecrb {
namespace {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK dqk15).
constexpr double kNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWeightsKronrod[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWeightsGauss[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    Complex value;
    double error;
    double resabs;
};

Panel evaluate_panel(const std::function<Complex(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const Complex fc = f(center);
    Complex kronrod = kWeightsKronrod[7] * fc;
    Complex gauss = kWeightsGauss[3] * fc;
    double resabs = kWeightsKronrod[7] * std::abs(fc);

    for (int j = 0; j < 7; ++j) {
        const Complex lo = f(center - half * kNodes[j]);
        const Complex hi = f(center + half * kNodes[j]);
        kronrod += kWeightsKronrod[j] * (lo + hi);
        resabs += kWeightsKronrod[j] * (std::abs(lo) + std::abs(hi));
        if (j % 2 == 1) gauss += kWeightsGauss[j / 2] * (lo + hi);
    }

    Panel p;
    p.a = a;
    p.b = b;
    p.value = half * kronrod;
    p.resabs = half * resabs;
    p.error = std::abs(half * (kronrod - gauss));
    return p;
}

bool converged(double err, const QuadratureSpec& spec, double mag, double resabs) {
    return err <= std::max(spec.abs_tol, spec.rel_tol * std::max(mag, resabs));
}

}  // namespace

QuadratureSpec QuadratureSpec::for_feature(double halfwidth, double feature_halfwidth) {
    QuadratureSpec spec;
    spec.halfwidth = halfwidth;
    if (feature_halfwidth > 0.0) {
        const double n = std::ceil(4.0 * halfwidth / feature_halfwidth);
        spec.initial_panels = static_cast<int>(std::clamp(n, 32.0, 2048.0));
    }
    return spec;
}

IntegralEstimate integrate(const std::function<Complex(double)>& integrand,
                           const QuadratureSpec& spec) {
    if (!(spec.halfwidth > 0.0) || spec.abs_tol <= 0.0 || spec.rel_tol <= 0.0)
        throw InvalidArgument("integrate: halfwidth and tolerances must be positive");

    const int n0 = std::max(1, spec.initial_panels);
    auto worse = [](const Panel& x, const Panel& y) { return x.error < y.error; };
    std::priority_queue<Panel, std::vector<Panel>, decltype(worse)> heap(worse);

    Complex total{0.0, 0.0};
    double total_err = 0.0;
    double total_resabs = 0.0;
    const double width = 2.0 * spec.halfwidth / n0;
    for (int i = 0; i < n0; ++i) {
        Panel p = evaluate_panel(integrand, -spec.halfwidth + i * width,
                                 -spec.halfwidth + (i + 1) * width);
        total += p.value;
        total_err += p.error;
        total_resabs += p.resabs;
        heap.push(p);
    }

    int splits = 0;
    while (!converged(total_err, spec, std::abs(total), total_resabs)) {
        if (splits >= spec.max_subdivisions)
            throw NonConvergence("integrate: subdivision budget exhausted, error " +
                                 std::to_string(total_err));
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = evaluate_panel(integrand, worst.a, mid);
        Panel right = evaluate_panel(integrand, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_resabs += left.resabs + right.resabs - worst.resabs;
        heap.push(left);
        heap.push(right);
        ++splits;
    }

    IntegralEstimate out;
    out.value = total;
    out.error = total_err;
    out.l1_norm = total_resabs;
    out.panels = n0 + splits;
    return out;
}

double integrate_real(const std::function<double(double)>& integrand,
                      const QuadratureSpec& spec) {
    return integrate([&](double x) { return Complex(integrand(x), 0.0); }, spec)
        .value.real();
}

Eigen::MatrixXcd invert(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw InvalidArgument("invert: matrix must be square, dim >= 1");
    const Eigen::Index n = m.rows();

    // Physical matrices carry mixed units (entries can span 30 decades), so
    // singularity is judged on the row/column-equilibrated matrix, where
    // |det| < 1e-12 means genuine degeneracy rather than unit imbalance.
    Eigen::VectorXd dr(n), dc(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dr(i) = m.row(i).cwiseAbs().maxCoeff();
        if (!(dr(i) > 0.0)) throw SingularMatrix("invert: zero row");
    }
    Eigen::MatrixXcd scaled = dr.cwiseInverse().asDiagonal() * m;
    for (Eigen::Index j = 0; j < n; ++j) {
        dc(j) = scaled.col(j).cwiseAbs().maxCoeff();
        if (!(dc(j) > 0.0)) throw SingularMatrix("invert: zero column");
    }
    scaled = scaled * dc.cwiseInverse().asDiagonal();

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(scaled);
    const double det = std::abs(lu.determinant());
    if (!(det > 1e-12))
        throw SingularMatrix("invert: equilibrated |det| " + std::to_string(det) +
                             " below 1e-12");
    return dc.cwiseInverse().asDiagonal() * lu.inverse() *
           dr.cwiseInverse().asDiagonal();
}

Eigen::MatrixXd invert(const Eigen::MatrixXd& m) {
    return invert(Eigen::MatrixXcd(m.cast<Complex>())).real();
}

bool is_positive_semidefinite(const Eigen::MatrixXcd& m, double tol) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw InvalidArgument("is_positive_semidefinite: matrix must be square");

    const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
    const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (asym > tol * scale)
        throw NotHermitian("is_positive_semidefinite: asymmetry " +
                           std::to_string(asym / scale) + " exceeds tol");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()),
                                                       Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    return ev.minCoeff() >= -tol * largest;
}

bool is_positive_semidefinite(const Eigen::MatrixXd& m, double tol) {
    return is_positive_semidefinite(Eigen::MatrixXcd(m.cast<Complex>()), tol);
}

}  // namespace phasecrb
