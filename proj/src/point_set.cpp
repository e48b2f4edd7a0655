#include "ccpd/point_set.hpp"
#include "ccpd/config.hpp"

#include <sstream>
#include <utility>

namespace ccpd {

ValidationResult validate(const ColoredPointSet& set) {
    ValidationResult result;
    if (set.count() <= 0) {
        result.violations.push_back("count must be positive");
        return result;
    }
    if (set.colors.rows() != set.positions.rows()) {
        std::ostringstream msg;
        msg << "positions/colors row mismatch: " << set.positions.rows()
            << " vs " << set.colors.rows();
        result.violations.push_back(msg.str());
    }
    if (!set.positions.allFinite())
        result.violations.push_back("non-finite position");
    if (set.colors.size() > 0) {
        if (!set.colors.allFinite())
            result.violations.push_back("non-finite color");
        else if (set.colors.minCoeff() < 0.0 || set.colors.maxCoeff() > 1.0)
            result.violations.push_back("color out of range");
    }
    return result;
}

void require_valid(const ColoredPointSet& set, const std::string& what) {
    const ValidationResult result = validate(set);
    if (result.ok()) return;
    std::ostringstream msg;
    msg << what << ": invalid point set";
    for (const auto& v : result.violations) msg << "; " << v;
    throw std::invalid_argument(msg.str());
}

ColoredPointSet make_point_set(Eigen::MatrixXd positions, Eigen::MatrixXd colors) {
    if (colors.size() == 0) colors.resize(positions.rows(), 0);
    ColoredPointSet set{std::move(positions), std::move(colors)};
    require_valid(set, "make_point_set");
    return set;
}

Eigen::MatrixXd append_channels(const ColoredPointSet& set) {
    Eigen::MatrixXd out(set.count(), set.spatial_dims() + set.color_dims());
    out.leftCols(set.spatial_dims()) = set.positions;
    if (set.color_dims() > 0) out.rightCols(set.color_dims()) = set.colors;
    return out;
}

ColoredPointSet split_channels(const Eigen::MatrixXd& appended, Eigen::Index spatial_dims) {
    if (spatial_dims <= 0 || spatial_dims > appended.cols())
        throw std::invalid_argument("split_channels: spatial dimension out of range");
    return ColoredPointSet{appended.leftCols(spatial_dims),
                           appended.rightCols(appended.cols() - spatial_dims)};
}

ValidationResult validate(const RegistrationConfig& config) {
    ValidationResult result;
    auto check = [&](bool ok, const char* msg) {
        if (!ok) result.violations.push_back(msg);
    };
    check(std::isfinite(config.alpha) && config.alpha >= 0.0 && config.alpha < 1.0,
          "alpha must lie in [0,1)");
    check(std::isfinite(config.beta) && config.beta > 0.0, "beta must be positive");
    check(std::isfinite(config.lambda) && config.lambda > 0.0, "lambda must be positive");
    check(std::isfinite(config.w_shape) && config.w_shape >= 0.0, "w_shape must be nonnegative");
    check(std::isfinite(config.w_color) && config.w_color >= 0.0, "w_color must be nonnegative");
    check(config.w_shape + config.w_color > 0.0, "w_shape + w_color must be positive");
    if (config.sigma_color)
        check(std::isfinite(*config.sigma_color) && *config.sigma_color > 0.0,
              "sigma_color must be positive");
    check(config.max_iterations > 0, "max_iterations must be positive");
    check(std::isfinite(config.tolerance) && config.tolerance > 0.0, "tolerance must be positive");
    check(std::isfinite(config.sigma_floor) && config.sigma_floor > 0.0,
          "sigma_floor must be positive");
    return result;
}

void require_valid(const RegistrationConfig& config) {
    const ValidationResult result = validate(config);
    if (result.ok()) return;
    std::ostringstream msg;
    msg << "invalid registration config";
    for (const auto& v : result.violations) msg << "; " << v;
    throw std::invalid_argument(msg.str());
}

RegistrationConfig normalized(RegistrationConfig config) {
    if (config.w_color == 0.0) config.color_outlier_term = false;
    return config;
}

}  // namespace ccpd
