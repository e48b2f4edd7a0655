#pragma once

#include "ccpd/config.hpp"
#include "ccpd/point_set.hpp"

#include <Eigen/Dense>

namespace ccpd {

/// Per-pair Gaussian likelihoods for the current EM iteration. `shape` and
/// `color` hold the plain densities; `shape_log` / `color_log` are their
/// log-domain twins, kept so posterior columns survive underflow. The log
/// matrices are optional: posteriors built from hand-assembled raw matrices
/// fall back to the literal arithmetic.
struct LikelihoodMatrices {
    Eigen::MatrixXd shape;      // M x N, p_S
    Eigen::MatrixXd color;      // M x N, p_C (empty when color is unused)
    double sigma_shape_sq = 1.0;
    double sigma_color = 1.0;
    Eigen::MatrixXd shape_log;  // log p_S, same layout
    Eigen::MatrixXd color_log;

    Eigen::Index model_count() const { return shape.rows(); }
    Eigen::Index anchor_count() const { return shape.cols(); }
};

/// Soft correspondences: weights(i,n) is the posterior mass model point i
/// takes of anchor point n; outlier_mass(n) is the denominator share of the
/// combined outlier terms for that anchor.
struct PosteriorMatrix {
    Eigen::MatrixXd weights;       // M x N
    Eigen::VectorXd outlier_mass;  // N
};

/// Isotropic Gaussian densities of anchor positions around the transformed
/// model points: entry (i,n) = (2 pi s2)^(-D_S/2) exp(-|a_n - t_i|^2 / (2 s2)).
Eigen::MatrixXd shape_likelihoods(const Eigen::MatrixXd& anchor_positions,
                                  const Eigen::MatrixXd& transformed_model,
                                  double sigma_shape_sq);

/// Color densities; model colors are never transformed, so callers compute
/// this once per registration and reuse it.
Eigen::MatrixXd color_likelihoods(const ColoredPointSet& anchor,
                                  const ColoredPointSet& model,
                                  double sigma_color);

/// Fills shape + shape_log of `lik` (both derived from one pass of exponents).
void set_shape_likelihoods(LikelihoodMatrices& lik,
                           const Eigen::MatrixXd& anchor_positions,
                           const Eigen::MatrixXd& transformed_model,
                           double sigma_shape_sq);

/// Fills color + color_log of `lik`.
void set_color_likelihoods(LikelihoodMatrices& lik,
                           const ColoredPointSet& anchor,
                           const ColoredPointSet& model,
                           double sigma_color);

/// o_L = (alpha / (1 - alpha)) * (M / N).
double location_outlier_term(double alpha, Eigen::Index model_count, Eigen::Index anchor_count);

/// o_C for one anchor point from its column of color likelihoods:
/// (M / (sigma_C sqrt(2 pi))) * exp(-(sum p_C)^2 / (2 M sigma_C^2)).
double color_outlier_term(const Eigen::VectorXd& color_likelihood_column, double sigma_color);

/// Combined posterior: numerator p_S^wS * p_C^wC over the column denominator
/// (sum p_S)^wS * (sum p_C)^wC + o_C + o_L.
PosteriorMatrix ccpd_posterior(const LikelihoodMatrices& lik, const RegistrationConfig& config);

/// Shape-only posterior p_S / (sum p_S + o_L); each column plus its outlier
/// mass sums to one.
PosteriorMatrix cpd_posterior(const LikelihoodMatrices& lik, double alpha);

/// Monitoring objective: -sum_n log( sum_i ((1-alpha)/M) q(i,n) + alpha/N )
/// with q = p_S^wS * p_C^wC when with_color, else q = p_S. Inner sums are
/// clamped at 1e-300 before the log.
double negative_log_likelihood(const LikelihoodMatrices& lik,
                               const RegistrationConfig& config,
                               bool with_color);

}  // namespace ccpd
