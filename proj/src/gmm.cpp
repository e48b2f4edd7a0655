#include "ccpd/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccpd {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLogClamp = 1e-300;

// Exponent fast paths keep the w_color = 0 reduction bit-identical to the
// plain CPD arithmetic.
inline double powered(double x, double w) {
    if (w == 0.0) return 1.0;
    if (w == 1.0) return x;
    return std::pow(x, w);
}

inline double column_sum(const Eigen::MatrixXd& m, Eigen::Index n) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += m(i, n);
    return s;
}

inline double log_sum_exp_column(const Eigen::MatrixXd& logs, Eigen::Index n) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < logs.rows(); ++i) top = std::max(top, logs(i, n));
    if (!std::isfinite(top)) return top;
    double s = 0.0;
    for (Eigen::Index i = 0; i < logs.rows(); ++i) s += std::exp(logs(i, n) - top);
    return top + std::log(s);
}

inline double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double top = std::max(a, b);
    return top + std::log(std::exp(a - top) + std::exp(b - top));
}

// Shared worker: plain densities, optionally with their logs in one pass.
// Points are transposed up front so each sits in a contiguous column. The exp
// is evaluated per scalar on purpose; Eigen's packet exp saturates hugely
// negative inputs at a denormal instead of flushing to zero, which would
// leave phantom equal likelihoods in underflowed columns.
template <bool WithLog>
void gaussian_matrices(Eigen::MatrixXd& raw_out, Eigen::MatrixXd* log_out,
                       const Eigen::MatrixXd& anchor_rows,
                       const Eigen::MatrixXd& model_rows,
                       double sigma_sq) {
    const Eigen::Index m = model_rows.rows();
    const Eigen::Index n = anchor_rows.rows();
    const Eigen::Index dims = anchor_rows.cols();
    const double log_norm = -0.5 * static_cast<double>(dims) * std::log(kTwoPi * sigma_sq);
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma_sq);
    const Eigen::MatrixXd anchor_t = anchor_rows.transpose();
    const Eigen::MatrixXd model_t = model_rows.transpose();
    raw_out.resize(m, n);
    if constexpr (WithLog) log_out->resize(m, n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index col = 0; col < n; ++col) {
        const double* a = anchor_t.data() + col * dims;
        for (Eigen::Index row = 0; row < m; ++row) {
            const double* b = model_t.data() + row * dims;
            double d2 = 0.0;
            for (Eigen::Index d = 0; d < dims; ++d) {
                const double diff = a[d] - b[d];
                d2 += diff * diff;
            }
            const double log_value = log_norm - d2 * inv_two_sigma_sq;
            if constexpr (WithLog) (*log_out)(row, col) = log_value;
            raw_out(row, col) = std::exp(log_value);
        }
    }
}

}  // namespace

void set_shape_likelihoods(LikelihoodMatrices& lik,
                           const Eigen::MatrixXd& anchor_positions,
                           const Eigen::MatrixXd& transformed_model,
                           double sigma_shape_sq) {
    if (!anchor_positions.allFinite() || !transformed_model.allFinite())
        throw std::invalid_argument("shape_likelihoods: non-finite position");
    if (anchor_positions.cols() != transformed_model.cols())
        throw std::invalid_argument("shape_likelihoods: spatial dimension mismatch");
    if (!(sigma_shape_sq > 0.0))
        throw std::invalid_argument("shape_likelihoods: sigma_shape_sq must be positive");
    gaussian_matrices<true>(lik.shape, &lik.shape_log, anchor_positions, transformed_model,
                            sigma_shape_sq);
    lik.sigma_shape_sq = sigma_shape_sq;
}

void set_color_likelihoods(LikelihoodMatrices& lik,
                           const ColoredPointSet& anchor,
                           const ColoredPointSet& model,
                           double sigma_color) {
    require_valid(anchor, "color_likelihoods anchor");
    require_valid(model, "color_likelihoods model");
    if (anchor.color_dims() != model.color_dims())
        throw std::invalid_argument("color_likelihoods: color dimension mismatch");
    if (!(sigma_color > 0.0))
        throw std::invalid_argument("color_likelihoods: sigma_color must be positive");
    gaussian_matrices<true>(lik.color, &lik.color_log, anchor.colors, model.colors,
                            sigma_color * sigma_color);
    lik.sigma_color = sigma_color;
}

Eigen::MatrixXd shape_likelihoods(const Eigen::MatrixXd& anchor_positions,
                                  const Eigen::MatrixXd& transformed_model,
                                  double sigma_shape_sq) {
    if (!anchor_positions.allFinite() || !transformed_model.allFinite())
        throw std::invalid_argument("shape_likelihoods: non-finite position");
    if (anchor_positions.cols() != transformed_model.cols())
        throw std::invalid_argument("shape_likelihoods: spatial dimension mismatch");
    if (!(sigma_shape_sq > 0.0))
        throw std::invalid_argument("shape_likelihoods: sigma_shape_sq must be positive");
    Eigen::MatrixXd raw;
    gaussian_matrices<false>(raw, nullptr, anchor_positions, transformed_model, sigma_shape_sq);
    return raw;
}

Eigen::MatrixXd color_likelihoods(const ColoredPointSet& anchor,
                                  const ColoredPointSet& model,
                                  double sigma_color) {
    require_valid(anchor, "color_likelihoods anchor");
    require_valid(model, "color_likelihoods model");
    if (anchor.color_dims() != model.color_dims())
        throw std::invalid_argument("color_likelihoods: color dimension mismatch");
    if (!(sigma_color > 0.0))
        throw std::invalid_argument("color_likelihoods: sigma_color must be positive");
    Eigen::MatrixXd raw;
    gaussian_matrices<false>(raw, nullptr, anchor.colors, model.colors,
                             sigma_color * sigma_color);
    return raw;
}

double location_outlier_term(double alpha, Eigen::Index model_count, Eigen::Index anchor_count) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("location_outlier_term: alpha must lie in [0,1)");
    if (model_count <= 0 || anchor_count <= 0)
        throw std::invalid_argument("location_outlier_term: counts must be positive");
    return alpha / (1.0 - alpha) *
           (static_cast<double>(model_count) / static_cast<double>(anchor_count));
}

double color_outlier_term(const Eigen::VectorXd& color_likelihood_column, double sigma_color) {
    if (!(sigma_color > 0.0))
        throw std::invalid_argument("color_outlier_term: sigma_color must be positive");
    const double m = static_cast<double>(color_likelihood_column.size());
    if (m <= 0.0) throw std::invalid_argument("color_outlier_term: empty column");
    const double sum = color_likelihood_column.sum();
    const double scale = m / (sigma_color * std::sqrt(kTwoPi));
    return scale * std::exp(-(sum * sum) / (m * 2.0 * sigma_color * sigma_color));
}

// The posterior of one anchor column. The plain path evaluates the formula
// exactly as written; when the raw Gaussians have underflowed we redo the
// column in log space, where the per-column shift cancels in the ratio. The
// outlier terms join the shifted denominator through their own logs so the
// rescue stays algebraically identical to the literal formula.
PosteriorMatrix ccpd_posterior(const LikelihoodMatrices& lik, const RegistrationConfig& config) {
    const Eigen::Index m = lik.model_count();
    const Eigen::Index n = lik.anchor_count();
    const double w_s = config.w_shape;
    const double w_c = config.w_color;
    const bool with_color = w_c > 0.0 && lik.color.size() > 0;
    const bool has_logs = lik.shape_log.size() == lik.shape.size() &&
                          (!with_color || lik.color_log.size() == lik.color.size());
    const double o_l = location_outlier_term(config.alpha, m, n);
    const bool want_oc = config.color_outlier_term && with_color;

    PosteriorMatrix post;
    post.weights.resize(m, n);
    post.outlier_mass.resize(n);

    std::vector<std::string> failure;  // deferred so the loop can stay parallel

#pragma omp parallel for schedule(static)
    for (Eigen::Index col = 0; col < n; ++col) {
        const double sum_s = column_sum(lik.shape, col);
        const double sum_c = with_color ? column_sum(lik.color, col) : 1.0;
        const double o_c = want_oc ? color_outlier_term(lik.color.col(col), lik.sigma_color) : 0.0;
        const double outliers = o_c + o_l;

        const double den_main = powered(sum_s, w_s) * powered(sum_c, w_c);
        if (den_main > 0.0 && std::isfinite(den_main)) {
            const double den = den_main + outliers;
            for (Eigen::Index i = 0; i < m; ++i)
                post.weights(i, col) =
                    powered(lik.shape(i, col), w_s) *
                    (with_color ? powered(lik.color(i, col), w_c) : 1.0) / den;
            post.outlier_mass(col) = outliers / den;
            continue;
        }

        if (has_logs) {
            const double log_den_main =
                w_s * log_sum_exp_column(lik.shape_log, col) +
                (with_color ? w_c * log_sum_exp_column(lik.color_log, col) : 0.0);
            const double log_out = outliers > 0.0
                                       ? std::log(outliers)
                                       : -std::numeric_limits<double>::infinity();
            const double log_den = log_add_exp(log_den_main, log_out);
            for (Eigen::Index i = 0; i < m; ++i) {
                const double log_num = w_s * lik.shape_log(i, col) +
                                       (with_color ? w_c * lik.color_log(i, col) : 0.0);
                post.weights(i, col) = std::exp(log_num - log_den);
            }
            post.outlier_mass(col) = std::exp(log_out - log_den);
            continue;
        }

        if (outliers > 0.0 && den_main == 0.0) {
            // Literal formula: numerators underflow alongside the sums, the
            // outlier terms absorb the whole column.
            post.weights.col(col).setZero();
            post.outlier_mass(col) = 1.0;
            continue;
        }

#pragma omp critical
        failure.push_back("degenerate posterior column " + std::to_string(col));
    }

    if (!failure.empty()) throw numerical_error(failure.front());
    return post;
}

PosteriorMatrix cpd_posterior(const LikelihoodMatrices& lik, double alpha) {
    const Eigen::Index m = lik.model_count();
    const Eigen::Index n = lik.anchor_count();
    const double o_l = location_outlier_term(alpha, m, n);
    const bool has_logs = lik.shape_log.size() == lik.shape.size();

    PosteriorMatrix post;
    post.weights.resize(m, n);
    post.outlier_mass.resize(n);

    std::vector<std::string> failure;

#pragma omp parallel for schedule(static)
    for (Eigen::Index col = 0; col < n; ++col) {
        const double sum_s = column_sum(lik.shape, col);
        if (sum_s > 0.0 && std::isfinite(sum_s)) {
            const double den = sum_s + o_l;
            for (Eigen::Index i = 0; i < m; ++i) post.weights(i, col) = lik.shape(i, col) / den;
            post.outlier_mass(col) = o_l / den;
            continue;
        }
        if (has_logs) {
            const double log_out =
                o_l > 0.0 ? std::log(o_l) : -std::numeric_limits<double>::infinity();
            const double log_den = log_add_exp(log_sum_exp_column(lik.shape_log, col), log_out);
            for (Eigen::Index i = 0; i < m; ++i)
                post.weights(i, col) = std::exp(lik.shape_log(i, col) - log_den);
            post.outlier_mass(col) = std::exp(log_out - log_den);
            continue;
        }
        if (o_l > 0.0) {
            post.weights.col(col).setZero();
            post.outlier_mass(col) = 1.0;
            continue;
        }
#pragma omp critical
        failure.push_back("degenerate posterior column " + std::to_string(col));
    }

    if (!failure.empty()) throw numerical_error(failure.front());
    return post;
}

double negative_log_likelihood(const LikelihoodMatrices& lik,
                               const RegistrationConfig& config,
                               bool with_color) {
    const Eigen::Index m = lik.model_count();
    const Eigen::Index n = lik.anchor_count();
    const double alpha = config.alpha;
    const double mix = (1.0 - alpha) / static_cast<double>(m);
    const double uniform = alpha / static_cast<double>(n);
    const bool color_available = with_color && lik.color.size() > 0;

    Eigen::VectorXd column_terms(n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index col = 0; col < n; ++col) {
        double q = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            double v = lik.shape(i, col);
            if (color_available)
                v = powered(v, config.w_shape) * powered(lik.color(i, col), config.w_color);
            q += v;
        }
        column_terms(col) = std::log(std::max(mix * q + uniform, kLogClamp));
    }

    double acc = 0.0;
    for (Eigen::Index col = 0; col < n; ++col) acc += column_terms(col);
    return -acc;
}

}  // namespace ccpd
