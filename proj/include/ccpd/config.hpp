#pragma once

#include "ccpd/point_set.hpp"

#include <optional>

namespace ccpd {

/// All registration hyperparameters. sigma_color empty means "derive from
/// the data" (mean squared color distance between the two sets).
struct RegistrationConfig {
    double alpha = 0.1;                 // outlier mixture weight, in [0,1)
    double beta = 2.0;                  // motion-coherence kernel width
    double lambda = 3.0;                // regularization weight
    double w_shape = 1.0;               // shape likelihood exponent
    double w_color = 1.0;               // color likelihood exponent
    std::optional<double> sigma_color;  // fixed color std-dev, or auto
    bool color_outlier_term = true;     // include the color bias in the posterior denominator
    int max_iterations = 150;
    double tolerance = 1e-8;            // relative objective-change stop
    double sigma_floor = 1e-10;         // minimum allowed sigma_shape^2
    bool prenormalize = false;          // joint zero-mean/unit-extent rescale
};

ValidationResult validate(const RegistrationConfig& config);
void require_valid(const RegistrationConfig& config);

/// Returns the config with dependent fields resolved; currently this
/// forces color_outlier_term off when w_color == 0.
RegistrationConfig normalized(RegistrationConfig config);

}  // namespace ccpd
