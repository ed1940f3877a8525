#include "phasecrb/cli.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "phasecrb/report.hpp"

namespace phasecrb::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) { return format_double(v); }

Json config_echo(const ProblemConfig& cfg) {
    Json j;
    j["wavelength_m"] = cfg.wavelength;
    j["h0_m"] = cfg.height0;
    j["alpha0_per_m"] = cfg.alpha;
    j["beta0_deg"] = cfg.beta_rad * 180.0 / std::numbers::pi;
    j["w_m"] = cfg.beam_w;
    j["k_rad_per_m"] = cfg.k;
    j["kh"] = cfg.kh();
    j["walpha"] = cfg.walpha();
    j["walpha_inv_sq"] = 1.0 / (cfg.walpha() * cfg.walpha());
    j["photons"] = cfg.photons;
    j["family"] = family_name(cfg.family);
    j["parameters"] = cfg.parameters;
    j["exact"] = cfg.exact;
    j["grid_points"] = cfg.grid_points;
    j["seed"] = cfg.seed;
    return j;
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

Eigen::MatrixXd scaled_fisher(const CliffIntegrals& n, int m) {
    // Per-photon single-photon QFIM in the scaled coordinates (k dh, h0 dalpha).
    Eigen::MatrixXd F(m, m);
    F(0, 0) = 1.0 - n.N3;
    if (m == 2) {
        F(0, 1) = F(1, 0) = n.N1;
        F(1, 1) = n.N2;
    }
    return 4.0 * F;
}

Eigen::MatrixXd si_fisher(const ProblemConfig& cfg, const CliffIntegrals& n, int m) {
    Eigen::MatrixXd F = scaled_fisher(n, m);
    const double k = cfg.k, h0 = cfg.height0;
    F(0, 0) *= k * k;
    if (m == 2) {
        F(0, 1) *= k * h0;
        F(1, 0) *= k * h0;
        F(1, 1) *= h0 * h0;
    }
    return F;
}

}  // namespace

PhaseModel model_from(const ProblemConfig& cfg) {
    if (!cfg.tabulated_csv.empty()) {
        const TabulatedInput tab = read_tabulated_csv(cfg.tabulated_csv);
        return tabulated_phase_model(tab.x, tab.phase);
    }
    PhaseModel full = cliff_model(cfg.cliff());
    if (cfg.parameters == 1) return fix_parameter(full, 1, cfg.alpha);
    return full;
}

IlluminationProfile profile_from(const ProblemConfig& cfg) {
    // A four-column tabulated file carries its own illumination amplitude.
    if (!cfg.tabulated_csv.empty()) {
        const TabulatedInput tab = read_tabulated_csv(cfg.tabulated_csv);
        if (tab.amplitude)
            return IlluminationProfile::tabulated(tab.x, *tab.amplitude);
    }
    return gaussian_profile(cfg.beam_w);
}

QuadratureSpec quadrature_from(const ProblemConfig& cfg, const PhaseModel& model,
                               const IlluminationProfile& f) {
    QuadratureSpec q = quadrature_for(model, f);
    if (cfg.grid_halfwidth > 0.0)
        q = QuadratureSpec::for_feature(cfg.grid_halfwidth, model.feature_halfwidth());
    q.rel_tol = cfg.quad_rel_tol;
    if (cfg.quad_abs_tol > 0.0) q.abs_tol = cfg.quad_abs_tol;
    else q.abs_tol = 1e-290;
    return q;
}

GridSpec grid_from(const ProblemConfig& cfg) {
    GridSpec g;
    g.points = cfg.grid_points;
    g.halfwidth = cfg.grid_halfwidth;  // 0 falls back to the quadrature window
    return g;
}

// ---------------------------------------------------------------------------
// qfim

int cmd_qfim(const ProblemConfig& cfg, std::ostream& os) {
    const bool tabulated = !cfg.tabulated_csv.empty();
    const IlluminationProfile f = profile_from(cfg);
    const PhaseModel model = model_from(cfg);
    const int m = model.parameter_count();
    const QuadratureSpec quad = quadrature_from(cfg, model, f);

    const InnerProducts ip = inner_products(model, f, model.reference(), quad);
    const FisherResult fs = qfim_single_photon(ip, cfg.photons);
    const FisherResult fc = qfim_coherent(ip, cfg.photons);

    Json integrals_exact, integrals_fo;
    bool constant_field_valid = false;
    if (!tabulated) {
        const CliffParameters p = cfg.cliff();
        const CliffIntegrals n_exact = cliff_integrals(p, f, true);
        const CliffIntegrals n_fo = cliff_integrals(p, f, false);
        constant_field_valid = n_exact.valid;

        os << "# problem\n";
        os << "kh = " << fmt(cfg.kh()) << "  walpha = " << fmt(cfg.walpha())
           << "  (walpha)^-2 = " << fmt(1.0 / (cfg.walpha() * cfg.walpha()))
           << (n_exact.valid ? "  [constant-field ok]" : "  [constant-field INVALID]")
           << "\n\n";

        os << "# dimensionless integrals (exact | first-order)\n";
        os << "N1 = " << fmt(n_exact.N1) << " | " << fmt(n_fo.N1) << "\n";
        os << "N2 = " << fmt(n_exact.N2) << " | " << fmt(n_fo.N2) << "\n";
        os << "N3 = " << fmt(n_exact.N3) << " | " << fmt(n_fo.N3) << "\n";
        os << "N4 = " << fmt(n_exact.N4) << "  N5 = " << fmt(n_exact.N5)
           << "  N6 = " << fmt(n_exact.N6) << "\n\n";
        integrals_exact = {{"N1", n_exact.N1}, {"N2", n_exact.N2}, {"N3", n_exact.N3},
                           {"N4", n_exact.N4}, {"N5", n_exact.N5}, {"N6", n_exact.N6}};
        integrals_fo = {{"N1", n_fo.N1}, {"N2", n_fo.N2}, {"N3", n_fo.N3}};
    } else {
        os << "# tabulated phase model: " << cfg.tabulated_csv << "\n\n";
    }

    auto print_family = [&](const FisherResult& r, const char* label) {
        os << "# QFIM " << label << " (SI units, N = " << fmt(cfg.photons) << ")\n";
        os << r.F << "\n";
        os << "crb diag:";
        for (int i = 0; i < m; ++i) os << " " << fmt(r.crb_diag(i));
        os << "\nsymmetry I:";
        for (int i = 0; i < m; ++i) os << " " << fmt(r.symmetry(i));
        os << "\n\n";
    };
    print_family(fs, "single-photon");
    print_family(fc, "coherent");

    Json j;
    j["command"] = "qfim";
    j["config"] = config_echo(cfg);
    if (!tabulated) {
        j["integrals_exact"] = integrals_exact;
        j["integrals_first_order"] = integrals_fo;
        j["constant_field_valid"] = constant_field_valid;
    }
    j["F_single_photon"] = to_json(fs.F);
    j["F_coherent"] = to_json(fc.F);
    j["crb_diag_single_photon"] = to_json(Eigen::VectorXd(fs.crb_diag));
    j["crb_diag_coherent"] = to_json(Eigen::VectorXd(fc.crb_diag));
    j["symmetry_integrals"] = to_json(Eigen::VectorXd(fs.symmetry));

    if (!tabulated) {
        os << "# first-order precision bounds\n";
        try {
            const CliffParameters p = cfg.cliff();
            const PrecisionBounds bs = precision_bounds_cliff(p, f, cfg.photons,
                                                              Family::single_photon);
            const PrecisionBounds bc = precision_bounds_cliff(p, f, cfg.photons,
                                                              Family::coherent);
            os << "sigma_h  single-photon = " << fmt(bs.sigma_h)
               << "   coherent = " << fmt(bc.sigma_h) << "\n";
            os << "sigma_alpha (both families) = " << fmt(bs.sigma_alpha)
               << "   coefficient = " << fmt(bs.alpha_coefficient) << "\n";
            j["sigma_h_single_photon"] = bs.sigma_h;
            j["sigma_h_coherent"] = bc.sigma_h;
            j["sigma_alpha"] = bs.sigma_alpha;
            j["sigma_alpha_coefficient"] = bs.alpha_coefficient;
            j["regime_ratio"] = bs.regime_ratio;
        } catch (const RegimeViolation& e) {
            os << "first-order bounds unavailable: " << e.what() << "\n";
            j["precision_bounds_error"] = e.what();
        }
    }

    if (!cfg.out_dir.empty()) {
        ensure_out_dir(cfg.out_dir);
        write_text_file(join_path(cfg.out_dir, "qfim.json"), j.dump(2) + "\n");
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// modes

int cmd_modes(const ProblemConfig& cfg, std::ostream& os) {
    const bool tabulated = !cfg.tabulated_csv.empty();
    const IlluminationProfile f = profile_from(cfg);
    const PhaseModel model = model_from(cfg);
    const QuadratureSpec quad = quadrature_from(cfg, model, f);
    const ModeBasis basis =
        build_basis(model, f, model.reference(), grid_from(cfg), quad);

    const Eigen::MatrixXcd gram = grid_gram(basis);
    const double gram_dev =
        (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols()))
            .cwiseAbs()
            .maxCoeff();

    const std::string dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
    ensure_out_dir(dir);
    Json manifest;
    manifest["command"] = "modes";
    manifest["config"] = config_echo(cfg);
    // Cliff profiles export in the normalized coordinate y = alpha0 x;
    // tabulated models have no natural steepness scale and stay in meters.
    const double coord_scale = tabulated ? 1.0 : cfg.alpha;
    const std::string coord_label = tabulated ? "x_meters" : "y";
    manifest["coordinate"] = tabulated ? "x in meters" : "y = alpha0 * x";
    if (!tabulated) {
        const CliffIntegrals n = cliff_integrals(cfg.cliff(), f, true);
        manifest["N3"] = n.N3;
        manifest["g1_asymptote"] = 1.0 / std::sqrt(1.0 - n.N3);
    }
    manifest["grid_gram_max_deviation"] = gram_dev;
    Json files = Json::array();
    for (int k = 0; k < basis.mode_count(); ++k) {
        const std::string name = "mode_g" + std::to_string(k) + ".csv";
        write_mode_csv(basis, k, join_path(dir, name), coord_scale, coord_label);
        files.push_back(name);
    }
    manifest["files"] = files;
    write_text_file(join_path(dir, "modes_manifest.json"), manifest.dump(2) + "\n");

    os << "wrote " << basis.mode_count() << " mode profiles to " << dir
       << " (grid gram deviation " << fmt(gram_dev) << ")\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// probs

int cmd_probs(const ProblemConfig& cfg, std::ostream& os) {
    if (!cfg.tabulated_csv.empty())
        throw ConfigError("probs: the second-order expansion needs the cliff model");
    const CliffParameters p = cfg.cliff();
    const IlluminationProfile f = gaussian_profile(cfg.beam_w);
    const PhaseModel model = model_from(cfg);
    const int m = model.parameter_count();
    const QuadratureSpec quad = quadrature_from(cfg, model, f);
    const CliffIntegrals n = cliff_integrals(p, f, cfg.exact);

    const double dh = cfg.kdh / cfg.k;
    const double dalpha = cfg.hdalpha / cfg.height0;
    if (m == 1 && cfg.hdalpha != 0.0)
        throw ConfigError("probs: hdalpha must be 0 for the one-parameter model");

    const ProbabilityVector ana = analytic_probabilities_cliff(p, n, dh, dalpha, m);
    const ModeBasis basis = build_basis(model, f, model.reference(), grid_from(cfg), quad);
    Eigen::VectorXd dtheta(m);
    dtheta(0) = dh;
    if (m == 2) dtheta(1) = dalpha;
    const ProbabilityVector num = probabilities_numeric(basis, dtheta);

    os << "# detection probabilities at kdh = " << fmt(cfg.kdh)
       << ", hdalpha = " << fmt(cfg.hdalpha) << "\n";
    os << "mode  numeric  analytic(2nd order)\n";
    for (int i = 0; i <= m; ++i)
        os << "p" << i << " = " << fmt(num.p(i)) << "  " << fmt(ana.p(i)) << "\n";
    os << "residual numeric = " << fmt(num.residual)
       << "  analytic = " << fmt(ana.residual) << "\n";
    os << "sum analytic = " << fmt(ana.p.sum()) << "\n";

    if (!cfg.out_dir.empty()) {
        ensure_out_dir(cfg.out_dir);
        Json j;
        j["command"] = "probs";
        j["config"] = config_echo(cfg);
        j["kdh"] = cfg.kdh;
        j["hdalpha"] = cfg.hdalpha;
        j["numeric"] = to_json(Eigen::VectorXd(num.p));
        j["numeric_residual"] = num.residual;
        j["analytic"] = to_json(Eigen::VectorXd(ana.p));
        j["analytic_residual"] = ana.residual;
        write_text_file(join_path(cfg.out_dir, "probs.json"), j.dump(2) + "\n");
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const ProblemConfig& cfg, std::ostream& os) {
    if (!cfg.tabulated_csv.empty())
        throw ConfigError("simulate: estimation trials need the cliff model");
    if (cfg.family != Family::single_photon)
        throw ConfigError(
            "simulate: photon-counting trials model the single_photon family");
    const CliffParameters p = cfg.cliff();
    const IlluminationProfile f = gaussian_profile(cfg.beam_w);
    const int m = cfg.parameters;
    if (!(cfg.kdh > 0.0) || (m == 2 && !(cfg.hdalpha > 0.0)))
        throw ConfigError("simulate: kdh (and hdalpha for two parameters) must be > 0");

    const CliffIntegrals n = cliff_integrals(p, f, cfg.exact);

    Eigen::VectorXd dtheta_true(m), scale(m);
    dtheta_true(0) = cfg.kdh / cfg.k;
    scale(0) = 1.0 / cfg.k;
    if (m == 2) {
        dtheta_true(1) = cfg.hdalpha / cfg.height0;
        scale(1) = 1.0 / cfg.height0;
    }

    const double scaled_norm = std::max(cfg.kdh, cfg.hdalpha);
    std::string path = "analytic-second-order";
    std::function<ProbabilityVector(const Eigen::VectorXd&)> prob_model;
    std::optional<ModeBasis> basis;
    if (scaled_norm <= cfg.trust_radius) {
        prob_model = [p, n, m](const Eigen::VectorXd& d) {
            return analytic_probabilities_cliff(p, n, d(0), m == 2 ? d(1) : 0.0, m);
        };
    } else {
        path = "numeric-quadrature";
        const PhaseModel model = model_from(cfg);
        basis.emplace(
            build_basis(model, f, model.reference(), grid_from(cfg),
                        quadrature_from(cfg, model, f)));
        prob_model = [&basis](const Eigen::VectorXd& d) {
            return probabilities_numeric(*basis, d);
        };
    }

    MonteCarloConfig mc;
    mc.n_photons = static_cast<long long>(cfg.photons);
    mc.trials = cfg.trials;
    mc.master_seed = cfg.seed;
    mc.lo = Eigen::VectorXd::Zero(m);
    mc.hi = 2.0 * dtheta_true;
    mc.threads = cfg.threads;
    mc.probability_path = path;

    const Eigen::MatrixXd F_pp = si_fisher(cfg, n, m);
    const SimulationReport rep = monte_carlo(prob_model, F_pp, dtheta_true, mc);

    const double band_lo = cfg.efficiency_low.value_or(m == 1 ? 0.85 : 0.80);
    const double band_hi = cfg.efficiency_high.value_or(m == 1 ? 1.15 : 1.25);
    bool ok = rep.covariance_defined;
    for (int i = 0; i < m && ok; ++i)
        ok = rep.efficiency(i) >= band_lo && rep.efficiency(i) <= band_hi;

    os << "# simulate: " << rep.trials << " trials, " << rep.n_photons
       << " photons, path " << rep.probability_path << "\n";
    for (int i = 0; i < m; ++i) {
        os << "parameter " << i << ": mean " << fmt(rep.sample_mean(i)) << " (true "
           << fmt(dtheta_true(i)) << "), efficiency "
           << (rep.covariance_defined ? fmt(rep.efficiency(i)) : "undefined") << "\n";
    }
    os << "efficiency band [" << fmt(band_lo) << ", " << fmt(band_hi) << "]: "
       << (ok ? "within" : "OUTSIDE") << "\n";

    if (!cfg.out_dir.empty()) {
        ensure_out_dir(cfg.out_dir);
        Json j;
        j["command"] = "simulate";
        j["config"] = config_echo(cfg);
        j["rng"] = rep.rng_id;
        j["probability_path"] = rep.probability_path;
        j["trials"] = rep.trials;
        j["n_photons"] = rep.n_photons;
        j["master_seed"] = rep.master_seed;
        j["dtheta_true"] = to_json(rep.dtheta_true);
        j["dtheta_true_scaled"] = to_json(
            Eigen::VectorXd(rep.dtheta_true.cwiseQuotient(scale)));
        j["sample_mean"] = to_json(rep.sample_mean);
        j["covariance_defined"] = rep.covariance_defined;
        j["sample_covariance"] = to_json(rep.sample_covariance);
        j["crb"] = to_json(rep.crb);
        j["efficiency"] = to_json(rep.efficiency);
        j["efficiency_band"] = {band_lo, band_hi};
        j["within_band"] = ok;
        write_text_file(join_path(cfg.out_dir, "report.json"), j.dump(2) + "\n");

        CsvWriter csv(join_path(cfg.out_dir, "trials.csv"));
        std::vector<std::string> header{"trial", "seed"};
        header.push_back("dh_m");
        if (m == 2) header.push_back("dalpha_per_m");
        csv.row(header);
        for (int t = 0; t < rep.trials; ++t) {
            std::vector<std::string> row{std::to_string(t),
                                         std::to_string(rep.trial_seeds[(size_t)t])};
            for (int i = 0; i < m; ++i) row.push_back(fmt(rep.estimates(t, i)));
            csv.row(row);
        }
    }
    return ok ? kOk : kValidationFailure;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const ProblemConfig& cfg, const SweepRequest& req, std::ostream& os) {
    if (!cfg.tabulated_csv.empty())
        throw ConfigError("sweep: sweeps are defined over the cliff model");
    if (req.points < 2) throw ConfigError("sweep: need >= 2 points");
    if (!(req.to > req.from)) throw ConfigError("sweep: range must be increasing");
    if (req.log_spacing && !(req.from > 0.0))
        throw ConfigError("sweep: log spacing needs positive range");

    std::vector<double> values(static_cast<size_t>(req.points));
    for (int i = 0; i < req.points; ++i) {
        const double t = static_cast<double>(i) / (req.points - 1);
        values[static_cast<size_t>(i)] =
            req.log_spacing
                ? std::exp(std::log(req.from) + t * (std::log(req.to) - std::log(req.from)))
                : req.from + t * (req.to - req.from);
    }

    const bool prob_axis = (req.axis == "dh" || req.axis == "dalpha");
    if (req.axis == "dalpha" && cfg.parameters != 2)
        throw ConfigError("sweep: axis dalpha needs parameters = 2");
    CsvWriter* csv = nullptr;
    std::optional<CsvWriter> file_csv;
    std::string out_path;
    if (!cfg.out_dir.empty()) {
        ensure_out_dir(cfg.out_dir);
        out_path = join_path(cfg.out_dir, "sweep.csv");
        file_csv.emplace(out_path);
        csv = &*file_csv;
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    if (prob_axis) {
        const int m = cfg.parameters;
        header = {req.axis == "dh" ? "kdh" : "hdalpha"};
        for (int i = 0; i <= m; ++i) header.push_back("p" + std::to_string(i) + "_numeric");
        for (int i = 0; i <= m; ++i) header.push_back("p" + std::to_string(i) + "_analytic");
        header.push_back("residual_numeric");
        header.push_back("status");

        const IlluminationProfile f = gaussian_profile(cfg.beam_w);
        const PhaseModel model = model_from(cfg);
        const CliffParameters p = cfg.cliff();
        const CliffIntegrals n = cliff_integrals(p, f, cfg.exact);
        const ModeBasis basis = build_basis(model, f, model.reference(), grid_from(cfg),
                                            quadrature_from(cfg, model, f));
        for (double v : values) {
            std::vector<std::string> row{fmt(v)};
            try {
                Eigen::VectorXd dtheta = Eigen::VectorXd::Zero(m);
                double dh = cfg.kdh / cfg.k, dalpha = m == 2 ? cfg.hdalpha / cfg.height0 : 0.0;
                if (req.axis == "dh") dh = v / cfg.k;
                else dalpha = v / cfg.height0;
                dtheta(0) = dh;
                if (m == 2) dtheta(1) = dalpha;
                const ProbabilityVector num = probabilities_numeric(basis, dtheta);
                const ProbabilityVector ana =
                    analytic_probabilities_cliff(p, n, dh, dalpha, m);
                for (int i = 0; i <= m; ++i) row.push_back(fmt(num.p(i)));
                for (int i = 0; i <= m; ++i) row.push_back(fmt(ana.p(i)));
                row.push_back(fmt(num.residual));
                row.push_back("ok");
            } catch (const Error& e) {
                row.resize(header.size() - 1, "");
                row.push_back(std::string("error: ") + e.what());
            }
            rows.push_back(std::move(row));
        }
    } else if (req.axis == "w" || req.axis == "alpha" || req.axis == "N") {
        const std::string axis_label = req.axis == "w"       ? "w_m"
                                       : req.axis == "alpha" ? "alpha_per_m"
                                                             : "N_photons";
        header = {axis_label,          "walpha",           "kh",
                  "N1",                "N2",               "N3",
                  "F11_s_per_m2",      "F11_c_per_m2",     "F22_m2",
                  "F12",               "crb_h_s_m2",       "crb_h_c_m2",
                  "crb_alpha_per_m2",  "sigma_h_s",        "sigma_h_c",
                  "sigma_alpha",       "regime_ratio",     "constant_field_valid",
                  "status"};
        for (double v : values) {
            std::vector<std::string> row{fmt(v)};
            try {
                ProblemConfig pt = cfg;
                pt.wa.reset();
                pt.w = (req.axis == "w") ? v : cfg.beam_w;
                if (req.axis == "alpha") {
                    pt.alpha0 = v;
                    pt.beta0_deg.reset();
                }
                if (req.axis == "N") pt.photons = v;
                pt.finalize();

                const CliffParameters p = pt.cliff();
                const IlluminationProfile f = gaussian_profile(pt.beam_w);
                const CliffIntegrals n = cliff_integrals(p, f, pt.exact);
                const Eigen::MatrixXd F = si_fisher(pt, n, 2) * pt.photons;
                Eigen::MatrixXd Fc = F;
                Fc(0, 0) = 4.0 * pt.photons * pt.k * pt.k * (2.0 - n.N3);
                const Eigen::MatrixXd inv_s = invert(F);
                const Eigen::MatrixXd inv_c = invert(Fc);

                row.push_back(fmt(pt.walpha()));
                row.push_back(fmt(pt.kh()));
                row.push_back(fmt(n.N1));
                row.push_back(fmt(n.N2));
                row.push_back(fmt(n.N3));
                row.push_back(fmt(F(0, 0)));
                row.push_back(fmt(Fc(0, 0)));
                row.push_back(fmt(F(1, 1)));
                row.push_back(fmt(F(0, 1)));
                row.push_back(fmt(inv_s(0, 0)));
                row.push_back(fmt(inv_c(0, 0)));
                row.push_back(fmt(inv_s(1, 1)));
                double sh_s = std::sqrt(inv_s(0, 0)) / pt.height0;
                double sh_c = std::sqrt(inv_c(0, 0)) / pt.height0;
                double sa = std::sqrt(inv_s(1, 1)) / pt.alpha;
                row.push_back(fmt(sh_s));
                row.push_back(fmt(sh_c));
                row.push_back(fmt(sa));
                row.push_back(fmt((1.0 - n.N3) * n.N2 / (n.N1 * n.N1)));
                row.push_back(n.valid ? "true" : "false");
                row.push_back("ok");
            } catch (const Error& e) {
                row.resize(header.size() - 1, "");
                row.push_back(std::string("error: ") + e.what());
            }
            rows.push_back(std::move(row));
        }
    } else {
        throw ConfigError("sweep: axis must be one of w, alpha, N, dh, dalpha");
    }

    if (csv) {
        csv->row(header);
        for (const auto& r : rows) csv->row(r);
        os << "wrote " << rows.size() << " rows to " << out_path << "\n";
    } else {
        auto emit = [&os](const std::vector<std::string>& r) {
            for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << "\n";
        };
        emit(header);
        for (const auto& r : rows) emit(r);
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const ProblemConfig& cfg, std::ostream& os) {
    const CliffParameters p = cfg.cliff();
    const IlluminationProfile f = gaussian_profile(cfg.beam_w);
    const IlluminationProfile tab_f = profile_from(cfg);
    int failures = 0;

    enum class Status { ok, warn, fail };
    auto line = [&](Status s, const std::string& name, const std::string& detail) {
        const char* tag = s == Status::ok ? "[ ok ]" : s == Status::warn ? "[warn]" : "[FAIL]";
        if (s == Status::fail) ++failures;
        os << tag << " " << name << ": " << detail << "\n";
    };
    auto check = [&](bool ok, const std::string& name, const std::string& detail) {
        line(ok ? Status::ok : Status::fail, name, detail);
    };

    // Illumination normalization.
    {
        QuadratureSpec q;
        q.halfwidth = 6.0 * cfg.beam_w;
        q.abs_tol = 1e-14;
        q.rel_tol = 1e-12;
        const double norm = integrate_real([&](double x) { return f.intensity(x); }, q);
        check(std::abs(norm - 1.0) < 1e-8, "illumination normalization",
              "integral |f|^2 = " + fmt(norm));
    }

    // Analytic partial derivatives against finite differences.
    {
        const PhaseModel model = cliff_model(p);
        const PartialsReport rep = validate_partials(model, 128, cfg.seed);
        check(rep.pass, "cliff partial derivatives",
              "max rel deviation " + fmt(rep.max_rel_deviation.maxCoeff()));
    }
    if (!cfg.tabulated_csv.empty()) {
        const PhaseModel model = model_from(cfg);
        const PartialsReport rep = validate_partials(model, 128, cfg.seed);
        check(rep.pass, "tabulated partial derivatives",
              "max rel deviation " + fmt(rep.max_rel_deviation.maxCoeff()));
        QuadratureSpec q;
        q.halfwidth = tab_f.extent();
        q.initial_panels = 128;
        q.abs_tol = 1e-14;
        q.rel_tol = 1e-12;
        const double norm =
            integrate_real([&](double x) { return tab_f.intensity(x); }, q);
        check(std::abs(norm - 1.0) < 1e-8, "tabulated illumination normalization",
              "integral |f|^2 = " + fmt(norm));
    }

    // Constant-field approximation validity and first-order agreement.
    const CliffIntegrals ne = cliff_integrals(p, f, true);
    {
        const double u2 = 1.0 / (ne.wa * ne.wa);
        if (!ne.valid)
            line(Status::warn, "constant-field approximation",
                 "(walpha)^-2 = " + fmt(u2) + " not << 1; first-order forms unreliable");
        else {
            const double rel = std::abs(ne.N3 - ne.first_order_N3) / ne.first_order_N3;
            check(rel < 10.0 * u2, "constant-field approximation",
                  "N3 first-order rel error " + fmt(rel));
        }
    }

    // Second-order probability sum rule.
    {
        double worst = 0.0;
        for (double t : {0.01, 0.1, 0.3}) {
            const ProbabilityVector pv = analytic_probabilities_cliff(
                p, ne, t / cfg.k, t / cfg.height0, 2);
            worst = std::max(worst, std::abs(pv.p.sum() - 1.0));
        }
        check(worst < 1e-12, "analytic probability sum rule",
              "max |sum - 1| = " + fmt(worst));
    }

    const PhaseModel model2 = cliff_model(p);
    const QuadratureSpec quad = quadrature_from(cfg, model2, f);

    // Basis orthonormality under grid quadrature.
    {
        const ModeBasis basis =
            build_basis(model2, f, model2.reference(), grid_from(cfg), quad);
        const Eigen::MatrixXcd gram = grid_gram(basis);
        const double dev =
            (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols()))
                .cwiseAbs()
                .maxCoeff();
        check(dev < 1e-8, "mode orthonormality", "grid gram deviation " + fmt(dev));
    }

    // QFIM family identity F_c = F_s + 4N g g^T.
    {
        const InnerProducts ip = inner_products(model2, f, model2.reference(), quad);
        const FisherResult fs = qfim_single_photon(ip, cfg.photons);
        const FisherResult fc = qfim_coherent(ip, cfg.photons);
        const Eigen::MatrixXd gap =
            fc.F - fs.F - 4.0 * cfg.photons * ip.g * ip.g.transpose();
        const double rel = gap.cwiseAbs().maxCoeff() / fc.F.cwiseAbs().maxCoeff();
        check(rel < 1e-9, "QFIM family identity", "rel deviation " + fmt(rel));
    }

    // Bound saturation for one- and two-parameter estimation.
    for (int m = 1; m <= 2; ++m) {
        const PhaseModel model = m == 1 ? fix_parameter(model2, 1, cfg.alpha) : model2;
        try {
            const SaturationReport rep =
                saturation_report(model, f, model.reference());
            check(rep.pass,
                  "saturation (" + std::to_string(m) + " parameter)",
                  "max rel discrepancy " + fmt(rep.max_rel_discrepancy));
        } catch (const Error& e) {
            line(Status::fail, "saturation (" + std::to_string(m) + " parameter)",
                 e.what());
        }
    }

    // Raw derivative-state projector is not optimal for the cliff.
    {
        const PhaseModel model1 = fix_parameter(model2, 1, cfg.alpha);
        const InnerProducts ip = inner_products(model1, f, model1.reference(), quad);
        const ProjectorConditionResult r = nonorthogonal_condition_check(ip.G, ip.g);
        const double expect = 2.0 - ne.N3;
        check(!r.equal && std::abs(r.ratio - expect) < 1e-6,
              "derivative-state projector condition",
              "lhs/rhs = " + fmt(r.ratio) + ", expected " + fmt(expect));
    }

    os << (failures == 0 ? "all checks passed\n"
                         : std::to_string(failures) + " check(s) failed\n");
    return failures == 0 ? kOk : kValidationFailure;
}

}  // namespace phasecrb::cli
