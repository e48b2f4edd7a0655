#include "ccpd/registration.hpp"

#include <algorithm>
#include <cmath>

namespace ccpd {
namespace {

// Joint zero-mean / unit-max-extent frame over both sets; inverted on output.
void prenormalize_positions(RegistrationState& st) {
    const Eigen::Index n = st.anchor_positions.rows();
    const Eigen::Index m = st.model_positions.rows();
    const Eigen::Index dims = st.anchor_positions.cols();
    Eigen::RowVectorXd mean =
        (st.anchor_positions.colwise().sum() + st.model_positions.colwise().sum()) /
        static_cast<double>(n + m);
    double extent = 0.0;
    for (Eigen::Index d = 0; d < dims; ++d) {
        const double hi = std::max(st.anchor_positions.col(d).maxCoeff(),
                                   st.model_positions.col(d).maxCoeff());
        const double lo = std::min(st.anchor_positions.col(d).minCoeff(),
                                   st.model_positions.col(d).minCoeff());
        extent = std::max(extent, hi - lo);
    }
    if (extent <= 0.0) extent = 1.0;
    st.anchor_positions = (st.anchor_positions.rowwise() - mean) / extent;
    st.model_positions = (st.model_positions.rowwise() - mean) / extent;
    st.prenorm_shift = mean;
    st.prenorm_scale = extent;
}

double mean_squared_cross_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < a.rows(); ++j)
            acc += (a.row(j) - b.row(i)).squaredNorm();
    return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

}  // namespace

RegistrationState initialize(const ColoredPointSet& anchor,
                             const ColoredPointSet& model,
                             const RegistrationConfig& config) {
    require_valid(anchor, "initialize anchor");
    require_valid(model, "initialize model");
    require_valid(config);
    if (anchor.spatial_dims() != model.spatial_dims())
        throw std::invalid_argument("initialize: spatial dimension mismatch");

    RegistrationState st;
    st.config = normalized(config);
    st.use_color = st.config.w_color > 0.0 && anchor.color_dims() > 0 && model.color_dims() > 0;
    if (st.config.w_color > 0.0 && anchor.color_dims() != model.color_dims())
        throw std::invalid_argument("initialize: color dimension mismatch");

    st.anchor_positions = anchor.positions;
    st.model_positions = model.positions;
    st.prenorm_shift = Eigen::RowVectorXd::Zero(anchor.spatial_dims());
    if (st.config.prenormalize) prenormalize_positions(st);

    const Eigen::Index dims = st.anchor_positions.cols();
    st.sigma_shape_sq =
        mean_squared_cross_distance(st.anchor_positions, st.model_positions) /
        static_cast<double>(dims);
    st.sigma_shape_sq = std::max(st.sigma_shape_sq, st.config.sigma_floor);

    st.kernel = build_kernel(st.model_positions, st.config.beta);
    st.coefficients = Eigen::MatrixXd::Zero(st.model_positions.rows(), dims);
    st.transformed = st.model_positions;

    if (st.use_color) {
        if (st.config.sigma_color) {
            st.sigma_color = *st.config.sigma_color;
        } else {
            const double mean_sq = mean_squared_cross_distance(anchor.colors, model.colors) /
                                   static_cast<double>(anchor.color_dims());
            st.sigma_color = std::max(std::sqrt(mean_sq), 1e-6);
        }
        set_color_likelihoods(st.lik, anchor, model, st.sigma_color);
    }
    return st;
}

RegistrationReport run_registration(const ColoredPointSet& anchor,
                                    const ColoredPointSet& model,
                                    const RegistrationConfig& config,
                                    Method method) {
    RegistrationState st = initialize(anchor, model, config);
    const bool with_color = method == Method::ccpd && st.use_color;

    RegistrationReport report;
    double previous_objective = 0.0;

    for (int iteration = 0; iteration < st.config.max_iterations; ++iteration) {
        set_shape_likelihoods(st.lik, st.anchor_positions, st.transformed, st.sigma_shape_sq);

        const double objective = negative_log_likelihood(st.lik, st.config, with_color);
        if (!std::isfinite(objective)) throw numerical_error("diverged");
        report.sigma_shape_trace.push_back(st.sigma_shape_sq);
        report.objective_trace.push_back(objective);

        if (iteration > 0 &&
            objective_relative_change(previous_objective, objective) < st.config.tolerance) {
            report.converged = true;
            break;
        }
        previous_objective = objective;

        const PosteriorMatrix posterior = method == Method::ccpd
                                              ? ccpd_posterior(st.lik, st.config)
                                              : cpd_posterior(st.lik, st.config.alpha);
        st.coefficients = solve_coefficients({posterior.weights, st.anchor_positions,
                                              st.model_positions, st.kernel, st.config.lambda,
                                              st.sigma_shape_sq});
        st.transformed = apply_transform(st.model_positions, st.kernel, st.coefficients);
        st.sigma_shape_sq = update_sigma_shape(posterior, st.anchor_positions, st.transformed,
                                               st.config.sigma_floor);
        if (st.sigma_shape_sq <= st.config.sigma_floor) break;
    }
    report.iterations = static_cast<int>(report.objective_trace.size());

    Eigen::MatrixXd final_positions = st.transformed;
    if (st.config.prenormalize)
        final_positions = (final_positions * st.prenorm_scale).rowwise() + st.prenorm_shift;
    report.transformed = ColoredPointSet{std::move(final_positions), model.colors};
    report.field = CoherentField{std::move(st.kernel), std::move(st.coefficients)};
    return report;
}

RegistrationReport register_ccpd(const ColoredPointSet& anchor,
                                 const ColoredPointSet& model,
                                 const RegistrationConfig& config) {
    return run_registration(anchor, model, config, Method::ccpd);
}

RegistrationReport register_cpd(const ColoredPointSet& anchor,
                                const ColoredPointSet& model,
                                const RegistrationConfig& config) {
    return run_registration(anchor, model, config, Method::cpd);
}

}  // namespace ccpd
