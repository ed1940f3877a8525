#include "phasecrb/config.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace phasecrb {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (!end || *end != '\0' || end == value.c_str())
        throw ConfigError("config: " + key + " expects a number, got '" + value + "'");
    return v;
}

long long to_int(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (v != std::floor(v))
        throw ConfigError("config: " + key + " expects an integer, got '" + value + "'");
    return static_cast<long long>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: " + key + " expects true/false, got '" + value + "'");
}

}  // namespace

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        out[key] = value;
    }
    return out;
}

void apply_config_entry(ProblemConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "wavelength") cfg.wavelength = to_double(key, value);
    else if (key == "h0") cfg.h0 = to_double(key, value);
    else if (key == "beta0_deg") cfg.beta0_deg = to_double(key, value);
    else if (key == "alpha0") cfg.alpha0 = to_double(key, value);
    else if (key == "w") cfg.w = to_double(key, value);
    else if (key == "wa") cfg.wa = to_double(key, value);
    else if (key == "photons") cfg.photons = to_double(key, value);
    else if (key == "parameters") cfg.parameters = static_cast<int>(to_int(key, value));
    else if (key == "family") {
        if (value == "single_photon") cfg.family = Family::single_photon;
        else if (value == "coherent") cfg.family = Family::coherent;
        else throw ConfigError("config: family must be single_photon or coherent");
    }
    else if (key == "grid_points") cfg.grid_points = static_cast<int>(to_int(key, value));
    else if (key == "grid_halfwidth") cfg.grid_halfwidth = to_double(key, value);
    else if (key == "quad_rel_tol") cfg.quad_rel_tol = to_double(key, value);
    else if (key == "quad_abs_tol") cfg.quad_abs_tol = to_double(key, value);
    else if (key == "exact") cfg.exact = to_bool(key, value);
    else if (key == "trust_radius") cfg.trust_radius = to_double(key, value);
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(to_int(key, value));
    else if (key == "trials") cfg.trials = static_cast<int>(to_int(key, value));
    else if (key == "kdh") cfg.kdh = to_double(key, value);
    else if (key == "hdalpha") cfg.hdalpha = to_double(key, value);
    else if (key == "threads") cfg.threads = static_cast<int>(to_int(key, value));
    else if (key == "efficiency_low") cfg.efficiency_low = to_double(key, value);
    else if (key == "efficiency_high") cfg.efficiency_high = to_double(key, value);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "tabulated_csv") cfg.tabulated_csv = value;
    else throw ConfigError("config: unknown key '" + key + "'");
}

ProblemConfig load_config(const std::map<std::string, std::string>& entries) {
    ProblemConfig cfg;
    for (const auto& [k, v] : entries) apply_config_entry(cfg, k, v);
    cfg.finalize();
    return cfg;
}

void ProblemConfig::finalize() {
    if (!(wavelength > 0.0)) throw ConfigError("config: wavelength must be positive");
    height0 = h0.value_or(wavelength / 4.0);
    if (!(height0 > 0.0)) throw ConfigError("config: h0 must be positive");
    k = 2.0 * std::numbers::pi / wavelength;

    if (beta0_deg && alpha0)
        throw ConfigError("config: give exactly one of beta0_deg/alpha0");
    if (!beta0_deg && !alpha0) beta0_deg = 80.0;
    if (alpha0) {
        alpha = *alpha0;
        beta_rad = std::atan(alpha * height0 / 2.0);
    } else {
        beta_rad = *beta0_deg * std::numbers::pi / 180.0;
        alpha = 2.0 * std::tan(beta_rad) / height0;
    }
    if (!(alpha > 0.0)) throw ConfigError("config: alpha must be positive");

    // The beam width has no canonical reference value; it must be given.
    if (w && wa) throw ConfigError("config: give exactly one of w/wa");
    if (!w && !wa)
        throw ConfigError("config: the beam width is required; give w (meters) "
                          "or wa (the dimensionless w*alpha product)");
    beam_w = w ? *w : *wa / alpha;
    if (!(beam_w > 0.0)) throw ConfigError("config: beam width must be positive");

    if (parameters != 1 && parameters != 2)
        throw ConfigError("config: parameters must be 1 or 2");
    if (!(photons > 0.0)) throw ConfigError("config: photons must be positive");
    if (grid_points < 16) throw ConfigError("config: grid_points >= 16");
    if (trials < 1) throw ConfigError("config: trials >= 1");
    if (threads < 1) throw ConfigError("config: threads >= 1");
    if (!(trust_radius > 0.0)) throw ConfigError("config: trust_radius must be positive");
}

CliffParameters ProblemConfig::cliff() const {
    return CliffParameters::from_alpha(k, height0, alpha);
}

}  // namespace phasecrb
