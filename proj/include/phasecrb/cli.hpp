#pragma once

#include <iosfwd>
#include <string>

#include "phasecrb/config.hpp"
#include "phasecrb/estimation.hpp"
#include "phasecrb/modes.hpp"

namespace phasecrb::cli {

// Exit codes shared by all commands.
inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 2;
inline constexpr int kNumericalFailure = 3;
inline constexpr int kConfigError = 4;

struct SweepRequest {
    std::string axis;  // w | alpha | N | dh | dalpha
    double from = 0.0;
    double to = 0.0;
    int points = 0;
    bool log_spacing = false;
};

PhaseModel model_from(const ProblemConfig& cfg);
QuadratureSpec quadrature_from(const ProblemConfig& cfg, const PhaseModel& model,
                               const IlluminationProfile& f);
GridSpec grid_from(const ProblemConfig& cfg);

int cmd_qfim(const ProblemConfig& cfg, std::ostream& os);
int cmd_modes(const ProblemConfig& cfg, std::ostream& os);
int cmd_probs(const ProblemConfig& cfg, std::ostream& os);
int cmd_simulate(const ProblemConfig& cfg, std::ostream& os);
int cmd_sweep(const ProblemConfig& cfg, const SweepRequest& req, std::ostream& os);
int cmd_validate(const ProblemConfig& cfg, std::ostream& os);

}  // namespace phasecrb::cli
