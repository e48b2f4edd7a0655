#include "ccpd/coherent.hpp"

#include <Eigen/LU>

#include <cmath>

namespace ccpd {

namespace {
constexpr double kMassFloor = 1e-12;  // posterior row mass below this decouples the row
}

Eigen::MatrixXd build_kernel(const Eigen::MatrixXd& model_positions, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("build_kernel: beta must be positive");
    if (!model_positions.allFinite())
        throw std::invalid_argument("build_kernel: non-finite position");
    const Eigen::Index m = model_positions.rows();
    const Eigen::Index dims = model_positions.cols();
    const double inv_two_beta_sq = 1.0 / (2.0 * beta * beta);
    const Eigen::MatrixXd points_t = model_positions.transpose();
    Eigen::MatrixXd kernel(m, m);
    // Column-parallel over the full matrix: each thread owns whole columns,
    // and d2(i,j) == d2(j,i) exactly, so symmetry is bit-exact.
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < m; ++j) {
        const double* pj = points_t.data() + j * dims;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double* pi = points_t.data() + i * dims;
            double d2 = 0.0;
            for (Eigen::Index d = 0; d < dims; ++d) {
                const double diff = pi[d] - pj[d];
                d2 += diff * diff;
            }
            kernel(i, j) = std::exp(-d2 * inv_two_beta_sq);
        }
        kernel(j, j) = 1.0;
    }
    return kernel;
}

Eigen::MatrixXd solve_coefficients(const MStepInputs& in) {
    const Eigen::Index m = in.model_positions.rows();
    if (!(in.sigma_shape_sq > 0.0))
        throw std::invalid_argument("solve_coefficients: sigma_shape_sq must be positive");

    // P1 as a matrix-vector product; rowwise sums stride badly column-major.
    const Eigen::VectorXd row_mass =
        in.posterior_weights * Eigen::VectorXd::Ones(in.posterior_weights.cols());
    const Eigen::MatrixXd px = in.posterior_weights * in.anchor_positions;  // PX
    const double reg = in.lambda * in.sigma_shape_sq;

    Eigen::MatrixXd system = row_mass.asDiagonal() * in.kernel;
    system.diagonal().array() += reg;
    Eigen::MatrixXd rhs = px - row_mass.asDiagonal() * in.model_positions;

    for (Eigen::Index i = 0; i < m; ++i) {
        if (row_mass(i) < kMassFloor) {
            system.row(i).setZero();
            system(i, i) = reg;
            rhs.row(i) = -row_mass(i) * in.model_positions.row(i);
        }
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::MatrixXd coefficients = lu.solve(rhs);

    const double residual = (system * coefficients - rhs).norm();
    const double bound =
        1e-8 * (system.norm() * coefficients.norm() + rhs.norm());
    if (!coefficients.allFinite() || residual > std::max(bound, 1e-300))
        throw numerical_error("M-step solve failed");
    return coefficients;
}

Eigen::MatrixXd apply_transform(const Eigen::MatrixXd& model_positions,
                                const Eigen::MatrixXd& kernel,
                                const Eigen::MatrixXd& coefficients) {
    return model_positions + kernel * coefficients;
}

double update_sigma_shape(const PosteriorMatrix& posterior,
                          const Eigen::MatrixXd& anchor_positions,
                          const Eigen::MatrixXd& transformed,
                          double sigma_floor) {
    const double total_mass = posterior.weights.sum();  // N_P
    if (!(total_mass > 0.0)) throw numerical_error("posterior mass vanished");
    const double dims = static_cast<double>(anchor_positions.cols());

    const Eigen::VectorXd col_mass = posterior.weights.colwise().sum();  // P^T 1
    const Eigen::VectorXd row_mass =
        posterior.weights * Eigen::VectorXd::Ones(posterior.weights.cols());  // P1
    const Eigen::MatrixXd px = posterior.weights * anchor_positions;

    const double anchor_term = col_mass.dot(anchor_positions.rowwise().squaredNorm());
    const double cross_term = px.cwiseProduct(transformed).sum();  // tr((PX)^T T)
    const double model_term = row_mass.dot(transformed.rowwise().squaredNorm());

    const double sigma_sq = (anchor_term - 2.0 * cross_term + model_term) / (total_mass * dims);
    return std::max(sigma_sq, sigma_floor);
}

}  // namespace ccpd
