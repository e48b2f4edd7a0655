#pragma once

#include "ccpd/gmm.hpp"

#include <Eigen/Dense>

namespace ccpd {

/// The displacement field: T = Y + kernel * coefficients.
struct CoherentField {
    Eigen::MatrixXd kernel;        // M x M Gaussian kernel G
    Eigen::MatrixXd coefficients;  // M x D_S matrix W
};

struct MStepInputs {
    Eigen::Ref<const Eigen::MatrixXd> posterior_weights;  // P, M x N
    Eigen::Ref<const Eigen::MatrixXd> anchor_positions;   // X, N x D_S
    Eigen::Ref<const Eigen::MatrixXd> model_positions;    // Y, M x D_S (original)
    Eigen::Ref<const Eigen::MatrixXd> kernel;             // G, M x M
    double lambda;
    double sigma_shape_sq;
};

/// g_ij = exp(-|y_i - y_j|^2 / (2 beta^2)); symmetric, unit diagonal.
Eigen::MatrixXd build_kernel(const Eigen::MatrixXd& model_positions, double beta);

/// Solves the row-scaled system (d(P1) G + lambda s2 I) W = P X - d(P1) Y.
/// Rows whose posterior mass falls below 1e-12 decouple to
/// lambda s2 W_row = -(P1)_row Y_row, pinning them near zero.
Eigen::MatrixXd solve_coefficients(const MStepInputs& in);

/// T = Y + G W.
Eigen::MatrixXd apply_transform(const Eigen::MatrixXd& model_positions,
                                const Eigen::MatrixXd& kernel,
                                const Eigen::MatrixXd& coefficients);

/// Posterior-weighted residual variance per spatial dimension, clamped below
/// at sigma_floor.
double update_sigma_shape(const PosteriorMatrix& posterior,
                          const Eigen::MatrixXd& anchor_positions,
                          const Eigen::MatrixXd& transformed,
                          double sigma_floor);

}  // namespace ccpd
