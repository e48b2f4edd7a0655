#pragma once

#include "ccpd/config.hpp"
#include "ccpd/gmm.hpp"

#include <Eigen/Dense>

// Serial reference implementations of every numerical kernel, written as
// plain scalar loops straight off the defining formulas. They share no code
// with the parallel path; tests and the benchmark compare the two.
namespace ccpd::reference {

Eigen::MatrixXd shape_likelihoods(const Eigen::MatrixXd& anchor_positions,
                                  const Eigen::MatrixXd& transformed_model,
                                  double sigma_shape_sq);

Eigen::MatrixXd color_likelihoods(const Eigen::MatrixXd& anchor_colors,
                                  const Eigen::MatrixXd& model_colors,
                                  double sigma_color);

double color_outlier_term(const Eigen::VectorXd& color_likelihood_column, double sigma_color);

/// Literal per-column evaluation of the combined posterior.
PosteriorMatrix ccpd_posterior(const Eigen::MatrixXd& shape, const Eigen::MatrixXd& color,
                               const RegistrationConfig& config);

/// Literal per-column evaluation of the shape-only posterior.
PosteriorMatrix cpd_posterior(const Eigen::MatrixXd& shape, double alpha);

double negative_log_likelihood(const Eigen::MatrixXd& shape, const Eigen::MatrixXd& color,
                               const RegistrationConfig& config, bool with_color);

Eigen::MatrixXd build_kernel(const Eigen::MatrixXd& model_positions, double beta);

/// Solves the literal system (G + lambda s2 d(P1)^-1) W = d(P1)^-1 P X - Y,
/// forming the inverse explicitly and eliminating by hand.
Eigen::MatrixXd solve_coefficients_literal(const Eigen::MatrixXd& posterior_weights,
                                           const Eigen::MatrixXd& anchor_positions,
                                           const Eigen::MatrixXd& model_positions,
                                           const Eigen::MatrixXd& kernel,
                                           double lambda, double sigma_shape_sq);

Eigen::MatrixXd apply_transform(const Eigen::MatrixXd& model_positions,
                                const Eigen::MatrixXd& kernel,
                                const Eigen::MatrixXd& coefficients);

/// Double-loop weighted residual form (the normative definition).
double update_sigma_shape(const Eigen::MatrixXd& posterior_weights,
                          const Eigen::MatrixXd& anchor_positions,
                          const Eigen::MatrixXd& transformed);

}  // namespace ccpd::reference
