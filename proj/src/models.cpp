#include "phasecrb/models.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "phasecrb/rng.hpp"

namespace phasecrb {

namespace {
double sech(double y) {
    // 1/cosh without overflow for large |y|
    const double a = std::abs(y);
    if (a > 350.0) return 2.0 * std::exp(-a);
    return 1.0 / std::cosh(y);
}
}  // namespace

// ---------------------------------------------------------------------------
// CubicSpline

CubicSpline::CubicSpline(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
    : x_(x), y_(y) {
    const Eigen::Index n = x.size();
    if (n < 3 || y.size() != n)
        throw InvalidArgument("CubicSpline: need >= 3 matching samples");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(x(i) > x(i - 1)))
            throw InvalidArgument("CubicSpline: abscissae must be strictly increasing");

    // Natural end conditions: m_0 = m_{n-1} = 0. Thomas algorithm.
    m_ = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd diag(n), rhs(n), upper(n);
    diag(0) = 1.0; rhs(0) = 0.0; upper(0) = 0.0;
    for (Eigen::Index i = 1; i < n - 1; ++i) {
        const double h0 = x(i) - x(i - 1), h1 = x(i + 1) - x(i);
        diag(i) = 2.0 * (h0 + h1);
        upper(i) = h1;
        rhs(i) = 6.0 * ((y(i + 1) - y(i)) / h1 - (y(i) - y(i - 1)) / h0);
    }
    diag(n - 1) = 1.0; rhs(n - 1) = 0.0;

    for (Eigen::Index i = 1; i < n - 1; ++i) {
        const double h0 = x(i) - x(i - 1);
        const double w = h0 / diag(i - 1);
        diag(i) -= w * upper(i - 1);
        rhs(i) -= w * rhs(i - 1);
    }
    m_(n - 1) = rhs(n - 1) / diag(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i)
        m_(i) = (rhs(i) - upper(i) * m_(i + 1)) / diag(i);
}

double CubicSpline::operator()(double x) const {
    const Eigen::Index n = x_.size();
    if (x <= x_(0)) return y_(0);
    if (x >= x_(n - 1)) return y_(n - 1);
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        (x_(mid) <= x ? lo : hi) = mid;
    }
    const double h = x_(hi) - x_(lo), t = x - x_(lo);
    return y_(lo) + t * ((y_(hi) - y_(lo)) / h - h / 6.0 * (2.0 * m_(lo) + m_(hi))) +
           t * t * 0.5 * m_(lo) + t * t * t / (6.0 * h) * (m_(hi) - m_(lo));
}

double CubicSpline::derivative(double x) const {
    const Eigen::Index n = x_.size();
    if (x <= x_(0) || x >= x_(n - 1)) return 0.0;
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        (x_(mid) <= x ? lo : hi) = mid;
    }
    const double h = x_(hi) - x_(lo), t = x - x_(lo);
    return (y_(hi) - y_(lo)) / h - h / 6.0 * (2.0 * m_(lo) + m_(hi)) +
           t * m_(lo) + t * t / (2.0 * h) * (m_(hi) - m_(lo));
}

// ---------------------------------------------------------------------------
// IlluminationProfile

IlluminationProfile IlluminationProfile::gaussian(double w) {
    if (!(w > 0.0)) throw InvalidWidth("gaussian profile: w must be positive");
    IlluminationProfile p;
    p.kind_ = Kind::gaussian;
    p.w_ = w;
    return p;
}

IlluminationProfile IlluminationProfile::tabulated(const Eigen::VectorXd& x,
                                                   const Eigen::VectorXcd& amplitude) {
    if (x.size() != amplitude.size() || x.size() < 3)
        throw InvalidArgument("tabulated profile: need >= 3 matching samples");
    IlluminationProfile p;
    p.kind_ = Kind::tabulated;
    p.re_ = CubicSpline(x, amplitude.real());
    p.im_ = CubicSpline(x, amplitude.imag());
    // Window seen from the origin, so asymmetric sample ranges stay covered
    // by the symmetric quadrature interval.
    p.range_ = std::max(std::abs(x(0)), std::abs(x(x.size() - 1)));

    // Normalize the interpolant itself to unit L2 norm, so downstream
    // quadratures of |f|^2 see 1 at their own precision.
    QuadratureSpec spec;
    spec.halfwidth = 0.5 * (x(x.size() - 1) - x(0));
    spec.initial_panels = static_cast<int>(std::clamp<Eigen::Index>(x.size(), 32, 2048));
    spec.abs_tol = 1e-290;
    spec.rel_tol = 1e-13;
    const double mid = 0.5 * (x(0) + x(x.size() - 1));
    auto raw_intensity = [&](double t) {
        const double xx = t + mid;  // integrate around the sample midpoint
        if (xx < p.re_.x_min() || xx > p.re_.x_max()) return 0.0;
        return std::norm(Complex(p.re_(xx), p.im_(xx)));
    };
    const double norm = integrate_real(raw_intensity, spec);
    if (!(norm > 0.0)) throw InvalidArgument("tabulated profile: zero norm");
    p.norm_scale_ = 1.0 / std::sqrt(norm);
    const double x2 = integrate_real(
        [&](double t) { return (t + mid) * (t + mid) * raw_intensity(t); }, spec);
    p.w_ = 2.0 * std::sqrt(x2 / norm);  // RMS-equivalent beam radius
    return p;
}

Complex IlluminationProfile::amplitude(double x) const {
    if (kind_ == Kind::gaussian) {
        const double c = std::pow(2.0 / (std::numbers::pi * w_ * w_), 0.25);
        return Complex(c * std::exp(-x * x / (w_ * w_)), 0.0);
    }
    if (x < re_.x_min() || x > re_.x_max()) return Complex(0.0, 0.0);
    return norm_scale_ * Complex(re_(x), im_(x));
}

double IlluminationProfile::extent() const {
    return kind_ == Kind::gaussian ? 6.0 * w_ : range_;
}

// ---------------------------------------------------------------------------
// PhaseModel

PhaseModel::PhaseModel(std::vector<std::string> names, PhaseFn phase,
                       std::vector<PhaseFn> partials, Eigen::VectorXd theta0,
                       double feature_halfwidth)
    : names_(std::move(names)),
      phase_(std::move(phase)),
      partials_(std::move(partials)),
      theta0_(std::move(theta0)),
      feature_halfwidth_(feature_halfwidth) {
    const auto m = names_.size();
    if (partials_.size() != m || static_cast<size_t>(theta0_.size()) != m || m == 0)
        throw InvalidArgument("PhaseModel: inconsistent parameter count");
    scales_ = theta0_.cwiseAbs();
    for (Eigen::Index i = 0; i < scales_.size(); ++i)
        if (scales_(i) == 0.0) scales_(i) = 1.0;
}

PhaseModel& PhaseModel::set_parameter_scales(const Eigen::VectorXd& s) {
    if (s.size() != scales_.size() || (s.array() <= 0.0).any())
        throw InvalidArgument("PhaseModel: scales must be positive, one per parameter");
    scales_ = s;
    return *this;
}

// ---------------------------------------------------------------------------
// Cliff model

CliffParameters CliffParameters::from_alpha(double k, double h, double alpha) {
    CliffParameters p;
    p.k = k;
    p.h = h;
    p.alpha = alpha;
    p.beta = std::atan(alpha * h / 2.0);
    p.validate();
    return p;
}

CliffParameters CliffParameters::from_beta(double k, double h, double beta) {
    CliffParameters p;
    p.k = k;
    p.h = h;
    p.alpha = 2.0 * std::tan(beta) / h;
    p.beta = beta;
    p.validate();
    return p;
}

void CliffParameters::validate() const {
    if (!(k > 0.0 && h > 0.0 && alpha > 0.0))
        throw InvalidArgument("CliffParameters: k, h, alpha must be positive");
    if (beta) {
        const double expect = alpha * h / 2.0;
        if (std::abs(std::tan(*beta) - expect) > 1e-12 * std::max(1.0, expect))
            throw InvalidArgument("CliffParameters: tan(beta) != alpha*h/2");
    }
}

double slope_height(const CliffParameters& p, double x) {
    p.validate();
    return 0.5 * p.h * (1.0 + std::tanh(p.alpha * x));
}

IlluminationProfile gaussian_profile(double w) {
    return IlluminationProfile::gaussian(w);
}

PhaseModel cliff_model(const CliffParameters& p) {
    p.validate();
    const double k = p.k;
    auto phase = [k](double x, const Eigen::VectorXd& th) {
        return k * th(0) * (1.0 - std::tanh(th(1) * x));
    };
    auto d_h = [k](double x, const Eigen::VectorXd& th) {
        return k * (1.0 - std::tanh(th(1) * x));
    };
    auto d_alpha = [k](double x, const Eigen::VectorXd& th) {
        const double s = sech(th(1) * x);
        return -k * th(0) * x * s * s;
    };
    Eigen::VectorXd theta0(2);
    theta0 << p.h, p.alpha;
    return PhaseModel({"h", "alpha"}, phase, {d_h, d_alpha}, theta0, 4.0 / p.alpha);
}

PhaseModel fix_parameter(const PhaseModel& model, int index, double value) {
    const int m = model.parameter_count();
    if (index < 0 || index >= m)
        throw InvalidArgument("fix_parameter: index out of range");

    auto expand = [index, value, m](const Eigen::VectorXd& th) {
        Eigen::VectorXd full(m);
        int j = 0;
        for (int i = 0; i < m; ++i) full(i) = (i == index) ? value : th(j++);
        return full;
    };

    std::vector<std::string> names;
    std::vector<PhaseModel::PhaseFn> partials;
    Eigen::VectorXd theta0(m - 1), scales(m - 1);
    int j = 0;
    for (int i = 0; i < m; ++i) {
        if (i == index) continue;
        names.push_back(model.parameter_names()[static_cast<size_t>(i)]);
        partials.push_back([model, expand, i](double x, const Eigen::VectorXd& th) {
            return model.partial(i, x, expand(th));
        });
        theta0(j) = model.reference()(i);
        scales(j) = model.parameter_scales()(i);
        ++j;
    }
    auto phase = [model, expand](double x, const Eigen::VectorXd& th) {
        return model.phase(x, expand(th));
    };
    PhaseModel out(std::move(names), phase, std::move(partials), theta0,
                   model.feature_halfwidth());
    out.set_parameter_scales(scales);
    out.set_partials_tolerance(model.partials_tolerance());
    return out;
}

PhaseModel tabulated_phase_model(const Eigen::VectorXd& x, const Eigen::VectorXd& phase) {
    CubicSpline s(x, phase);
    const double range = x(x.size() - 1) - x(0);

    auto value = [s](double xx, const Eigen::VectorXd& th) {
        return th(0) * s(xx - th(1));
    };
    auto d_scale = [s](double xx, const Eigen::VectorXd& th) {
        return s(xx - th(1));
    };
    auto d_shift = [s](double xx, const Eigen::VectorXd& th) {
        return -th(0) * s.derivative(xx - th(1));
    };
    Eigen::VectorXd theta0(2);
    theta0 << 1.0, 0.0;
    PhaseModel out({"scale", "shift"}, value, {d_scale, d_shift}, theta0, 0.4 * range);
    Eigen::VectorXd scales(2);
    scales << 1.0, range / 20.0;
    out.set_parameter_scales(scales);
    out.set_partials_tolerance(1e-3);
    return out;
}

// ---------------------------------------------------------------------------
// Partials validation

PartialsReport validate_partials(const PhaseModel& model, int probes, uint64_t seed) {
    if (probes < 1) throw InvalidArgument("validate_partials: probes >= 1");
    const int m = model.parameter_count();
    SplitMix64 rng(seed);

    PartialsReport rep;
    rep.max_rel_deviation = Eigen::VectorXd::Zero(m);
    rep.threshold = model.partials_tolerance();

    const double xw = model.feature_halfwidth();
    for (int p = 0; p < probes; ++p) {
        const double x = xw * (2.0 * rng.uniform() - 1.0);
        Eigen::VectorXd theta = model.reference();
        for (int i = 0; i < m; ++i)
            theta(i) += 0.05 * model.parameter_scales()(i) * (2.0 * rng.uniform() - 1.0);

        for (int i = 0; i < m; ++i) {
            const double step = 1e-5 * model.parameter_scales()(i);
            Eigen::VectorXd tp = theta, tm = theta;
            tp(i) += step;
            tm(i) -= step;
            const double fd = (model.phase(x, tp) - model.phase(x, tm)) / (2.0 * step);
            const double an = model.partial(i, x, theta);
            const double denom =
                std::max({std::abs(an), std::abs(fd), 1e-9 * model.parameter_scales()(i)});
            rep.max_rel_deviation(i) =
                std::max(rep.max_rel_deviation(i), std::abs(an - fd) / denom);
        }
    }
    rep.pass = (rep.max_rel_deviation.array() < rep.threshold).all();
    return rep;
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

bool is_number(const std::string& s) {
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end && *end == '\0' && end != s.c_str();
}
}  // namespace

TabulatedInput read_tabulated_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("read_tabulated_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw InvalidArgument("read_tabulated_csv: empty file " + path);
    const auto header = split_csv_line(line);
    if (header.size() != 2 && header.size() != 4)
        throw InvalidArgument("read_tabulated_csv: expected 2 or 4 columns");
    for (const auto& h : header)
        if (is_number(h))
            throw InvalidArgument("read_tabulated_csv: header row required");

    std::vector<double> x, ph, re, im;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw InvalidArgument("read_tabulated_csv: bad field count at line " +
                                  std::to_string(lineno));
        x.push_back(std::stod(f[0]));
        if (f.size() == 2) {
            ph.push_back(std::stod(f[1]));
        } else {
            re.push_back(std::stod(f[1]));
            im.push_back(std::stod(f[2]));
            ph.push_back(std::stod(f[3]));
        }
    }
    if (x.size() < 3) throw InvalidArgument("read_tabulated_csv: need >= 3 rows");

    TabulatedInput out;
    out.x = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    out.phase = Eigen::Map<Eigen::VectorXd>(ph.data(), static_cast<Eigen::Index>(ph.size()));
    if (!re.empty()) {
        Eigen::VectorXcd amp(static_cast<Eigen::Index>(re.size()));
        for (size_t i = 0; i < re.size(); ++i)
            amp(static_cast<Eigen::Index>(i)) = Complex(re[i], im[i]);
        out.amplitude = amp;
    }
    return out;
}

}  // namespace phasecrb
