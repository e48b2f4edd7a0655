#include "ccpd/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ccpd::reference {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double squared_distance_rows(const Eigen::MatrixXd& a, Eigen::Index i,
                             const Eigen::MatrixXd& b, Eigen::Index j) {
    double acc = 0.0;
    for (Eigen::Index d = 0; d < a.cols(); ++d) {
        const double diff = a(i, d) - b(j, d);
        acc += diff * diff;
    }
    return acc;
}

// Gauss-Jordan with partial pivoting; dense desk-scale systems only.
Eigen::MatrixXd gauss_solve(Eigen::MatrixXd a, Eigen::MatrixXd b) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (a(pivot, col) == 0.0) throw std::runtime_error("gauss_solve: singular system");
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            b.row(pivot).swap(b.row(col));
        }
        const double inv = 1.0 / a(col, col);
        for (Eigen::Index c = 0; c < n; ++c) a(col, c) *= inv;
        for (Eigen::Index c = 0; c < b.cols(); ++c) b(col, c) *= inv;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a(r, col);
            if (factor == 0.0) continue;
            for (Eigen::Index c = 0; c < n; ++c) a(r, c) -= factor * a(col, c);
            for (Eigen::Index c = 0; c < b.cols(); ++c) b(r, c) -= factor * b(col, c);
        }
    }
    return b;
}

}  // namespace

Eigen::MatrixXd shape_likelihoods(const Eigen::MatrixXd& anchor_positions,
                                  const Eigen::MatrixXd& transformed_model,
                                  double sigma_shape_sq) {
    const Eigen::Index m = transformed_model.rows();
    const Eigen::Index n = anchor_positions.rows();
    const double dims = static_cast<double>(anchor_positions.cols());
    const double norm = std::pow(kTwoPi * sigma_shape_sq, -dims / 2.0);
    Eigen::MatrixXd out(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = norm * std::exp(-squared_distance_rows(transformed_model, i,
                                                               anchor_positions, j) /
                                        (2.0 * sigma_shape_sq));
    return out;
}

Eigen::MatrixXd color_likelihoods(const Eigen::MatrixXd& anchor_colors,
                                  const Eigen::MatrixXd& model_colors,
                                  double sigma_color) {
    const Eigen::Index m = model_colors.rows();
    const Eigen::Index n = anchor_colors.rows();
    const double dims = static_cast<double>(anchor_colors.cols());
    const double norm = std::pow(kTwoPi * sigma_color * sigma_color, -dims / 2.0);
    Eigen::MatrixXd out(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = norm * std::exp(-squared_distance_rows(model_colors, i, anchor_colors, j) /
                                        (2.0 * sigma_color * sigma_color));
    return out;
}

double color_outlier_term(const Eigen::VectorXd& color_likelihood_column, double sigma_color) {
    const double m = static_cast<double>(color_likelihood_column.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < color_likelihood_column.size(); ++i)
        sum += color_likelihood_column(i);
    return m / (sigma_color * std::sqrt(kTwoPi)) *
           std::exp(-(1.0 / m) * (sum * sum) / (2.0 * sigma_color * sigma_color));
}

PosteriorMatrix ccpd_posterior(const Eigen::MatrixXd& shape, const Eigen::MatrixXd& color,
                               const RegistrationConfig& config) {
    const Eigen::Index m = shape.rows();
    const Eigen::Index n = shape.cols();
    const double o_l = config.alpha / (1.0 - config.alpha) *
                       (static_cast<double>(m) / static_cast<double>(n));
    PosteriorMatrix post;
    post.weights.resize(m, n);
    post.outlier_mass.resize(n);
    for (Eigen::Index col = 0; col < n; ++col) {
        double sum_s = 0.0, sum_c = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            sum_s += shape(i, col);
            if (color.size() > 0) sum_c += color(i, col);
        }
        double o_c = 0.0;
        if (config.color_outlier_term && color.size() > 0)
            o_c = color_outlier_term(color.col(col), config.sigma_color.value_or(1.0));
        double den = std::pow(sum_s, config.w_shape);
        if (color.size() > 0) den *= std::pow(sum_c, config.w_color);
        den += o_c + o_l;
        for (Eigen::Index i = 0; i < m; ++i) {
            double num = std::pow(shape(i, col), config.w_shape);
            if (color.size() > 0) num *= std::pow(color(i, col), config.w_color);
            post.weights(i, col) = num / den;
        }
        post.outlier_mass(col) = (o_c + o_l) / den;
    }
    return post;
}

PosteriorMatrix cpd_posterior(const Eigen::MatrixXd& shape, double alpha) {
    const Eigen::Index m = shape.rows();
    const Eigen::Index n = shape.cols();
    const double o_l =
        alpha / (1.0 - alpha) * (static_cast<double>(m) / static_cast<double>(n));
    PosteriorMatrix post;
    post.weights.resize(m, n);
    post.outlier_mass.resize(n);
    for (Eigen::Index col = 0; col < n; ++col) {
        double sum_s = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) sum_s += shape(i, col);
        const double den = sum_s + o_l;
        for (Eigen::Index i = 0; i < m; ++i) post.weights(i, col) = shape(i, col) / den;
        post.outlier_mass(col) = o_l / den;
    }
    return post;
}

double negative_log_likelihood(const Eigen::MatrixXd& shape, const Eigen::MatrixXd& color,
                               const RegistrationConfig& config, bool with_color) {
    const Eigen::Index m = shape.rows();
    const Eigen::Index n = shape.cols();
    double acc = 0.0;
    for (Eigen::Index col = 0; col < n; ++col) {
        double q = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            double v = shape(i, col);
            if (with_color && color.size() > 0)
                v = std::pow(shape(i, col), config.w_shape) *
                    std::pow(color(i, col), config.w_color);
            q += v;
        }
        double inner = (1.0 - config.alpha) / static_cast<double>(m) * q +
                       config.alpha / static_cast<double>(n);
        if (inner < 1e-300) inner = 1e-300;
        acc += std::log(inner);
    }
    return -acc;
}

Eigen::MatrixXd build_kernel(const Eigen::MatrixXd& model_positions, double beta) {
    const Eigen::Index m = model_positions.rows();
    Eigen::MatrixXd kernel(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            kernel(i, j) = std::exp(-squared_distance_rows(model_positions, i, model_positions, j) /
                                    (2.0 * beta * beta));
    return kernel;
}

Eigen::MatrixXd solve_coefficients_literal(const Eigen::MatrixXd& posterior_weights,
                                           const Eigen::MatrixXd& anchor_positions,
                                           const Eigen::MatrixXd& model_positions,
                                           const Eigen::MatrixXd& kernel,
                                           double lambda, double sigma_shape_sq) {
    const Eigen::Index m = model_positions.rows();
    const Eigen::Index dims = model_positions.cols();

    std::vector<double> row_mass(static_cast<std::size_t>(m), 0.0);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < posterior_weights.cols(); ++j)
            row_mass[static_cast<std::size_t>(i)] += posterior_weights(i, j);

    Eigen::MatrixXd px = Eigen::MatrixXd::Zero(m, dims);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < posterior_weights.cols(); ++j)
            for (Eigen::Index d = 0; d < dims; ++d)
                px(i, d) += posterior_weights(i, j) * anchor_positions(j, d);

    Eigen::MatrixXd system = kernel;
    Eigen::MatrixXd rhs(m, dims);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double inv_mass = 1.0 / row_mass[static_cast<std::size_t>(i)];
        system(i, i) += lambda * sigma_shape_sq * inv_mass;
        for (Eigen::Index d = 0; d < dims; ++d)
            rhs(i, d) = px(i, d) * inv_mass - model_positions(i, d);
    }
    return gauss_solve(std::move(system), std::move(rhs));
}

Eigen::MatrixXd apply_transform(const Eigen::MatrixXd& model_positions,
                                const Eigen::MatrixXd& kernel,
                                const Eigen::MatrixXd& coefficients) {
    Eigen::MatrixXd out = model_positions;
    for (Eigen::Index i = 0; i < model_positions.rows(); ++i)
        for (Eigen::Index d = 0; d < model_positions.cols(); ++d)
            for (Eigen::Index j = 0; j < kernel.cols(); ++j)
                out(i, d) += kernel(i, j) * coefficients(j, d);
    return out;
}

double update_sigma_shape(const Eigen::MatrixXd& posterior_weights,
                          const Eigen::MatrixXd& anchor_positions,
                          const Eigen::MatrixXd& transformed) {
    double mass = 0.0;
    double residual = 0.0;
    for (Eigen::Index i = 0; i < posterior_weights.rows(); ++i)
        for (Eigen::Index j = 0; j < posterior_weights.cols(); ++j) {
            mass += posterior_weights(i, j);
            residual += posterior_weights(i, j) *
                        squared_distance_rows(anchor_positions, j, transformed, i);
        }
    return residual / (mass * static_cast<double>(anchor_positions.cols()));
}

}  // namespace ccpd::reference
