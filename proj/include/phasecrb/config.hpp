#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "phasecrb/fisher.hpp"
#include "phasecrb/models.hpp"

namespace phasecrb {

// Problem setup shared by all CLI commands. Populated from defaults, then a
// flat key = value config file, then command-line overrides; environment
// variables are never consulted.
struct ProblemConfig {
    double wavelength = 633e-9;      // m
    std::optional<double> h0;        // m; default wavelength/4
    std::optional<double> beta0_deg; // sidewall angle, degrees
    std::optional<double> alpha0;    // 1/m; exactly one of beta0/alpha0
    std::optional<double> w;         // beam radius, m
    std::optional<double> wa;        // dimensionless w*alpha; exactly one of w/wa
    double photons = 1e5;
    Family family = Family::single_photon;
    int parameters = 2;              // 1: height only, 2: height and steepness

    int grid_points = 4096;
    double grid_halfwidth = 0.0;     // m; 0 derives max(6w, 30/alpha)
    double quad_rel_tol = 1e-12;
    double quad_abs_tol = 0.0;       // 0 keeps the library floor
    bool exact = true;               // exact quadrature vs first-order closed forms
    double trust_radius = 1.5;       // scaled units (k dh, h0 dalpha)

    uint64_t seed = 1;
    int trials = 400;
    double kdh = 0.0;                // scaled offsets for probs/simulate
    double hdalpha = 0.0;
    int threads = 1;
    std::optional<double> efficiency_low, efficiency_high;
    std::string out_dir;
    std::string tabulated_csv;       // optional tabulated phase model input

    // Derived quantities (valid after finalize()).
    double k = 0.0;                  // 2 pi / wavelength
    double height0 = 0.0;
    double alpha = 0.0;
    double beta_rad = 0.0;
    double beam_w = 0.0;

    void finalize();                 // resolve derived values, check invariants
    CliffParameters cliff() const;
    double kh() const { return k * height0; }
    double walpha() const { return beam_w * alpha; }
};

// Flat TOML-style file: `key = value` lines, # comments, optional quotes.
std::map<std::string, std::string> parse_flat_config(const std::string& text);

ProblemConfig load_config(const std::map<std::string, std::string>& entries);

// Key assignment used both for files and --set overrides.
void apply_config_entry(ProblemConfig& cfg, const std::string& key,
                        const std::string& value);

}  // namespace phasecrb
