#pragma once

#include "ccpd/coherent.hpp"
#include "ccpd/config.hpp"
#include "ccpd/gmm.hpp"
#include "ccpd/point_set.hpp"

#include <cmath>
#include <vector>

namespace ccpd {

enum class Method { ccpd, cpd };

struct RegistrationReport {
    ColoredPointSet transformed;           // final T with the moving set's colors
    CoherentField field;
    std::vector<double> sigma_shape_trace; // sigma^2 entering each iteration
    std::vector<double> objective_trace;   // negative log-likelihood per iteration
    int iterations = 0;
    bool converged = false;
};

/// Working state shared by both drivers. Positions are held in the
/// (optionally prenormalized) solver frame; shift/scale allow inversion.
struct RegistrationState {
    RegistrationConfig config;          // normalized copy
    Eigen::MatrixXd anchor_positions;   // X (solver frame)
    Eigen::MatrixXd model_positions;    // Y (solver frame)
    Eigen::MatrixXd kernel;             // G
    Eigen::MatrixXd coefficients;       // W
    Eigen::MatrixXd transformed;        // T
    double sigma_shape_sq = 0.0;
    double sigma_color = 0.0;
    bool use_color = false;
    LikelihoodMatrices lik;             // color part cached across iterations
    Eigen::RowVectorXd prenorm_shift;
    double prenorm_scale = 1.0;
};

/// W = 0, sigma^2 from the mean squared cross distance, kernel G from the
/// model positions, color likelihoods computed once and cached.
RegistrationState initialize(const ColoredPointSet& anchor,
                             const ColoredPointSet& model,
                             const RegistrationConfig& config);

RegistrationReport run_registration(const ColoredPointSet& anchor,
                                    const ColoredPointSet& model,
                                    const RegistrationConfig& config,
                                    Method method);

/// Full CCPD: color-augmented posterior in the E-step.
RegistrationReport register_ccpd(const ColoredPointSet& anchor,
                                 const ColoredPointSet& model,
                                 const RegistrationConfig& config);

/// Baseline CPD: shape-only posterior; colors carried through untouched.
RegistrationReport register_cpd(const ColoredPointSet& anchor,
                                const ColoredPointSet& model,
                                const RegistrationConfig& config);

/// The stopping rule's notion of relative change, shared with tests.
inline double objective_relative_change(double previous, double current) {
    const double denom = std::abs(previous);
    return denom > 0 ? std::abs(current - previous) / denom : std::abs(current - previous);
}

}  // namespace ccpd
