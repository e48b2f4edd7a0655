#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ccpd {

/// Raised when a computation cannot continue for numerical reasons
/// (degenerate posterior columns, singular M-step systems, diverged runs).
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point set carrying positions (count x D_S) and colors (count x D_C).
/// Color components are stored normalized to [0,1]; D_C may be 0 for
/// colorless clouds. Instances are treated as immutable once built.
struct ColoredPointSet {
    Eigen::MatrixXd positions;
    Eigen::MatrixXd colors;

    Eigen::Index count() const { return positions.rows(); }
    Eigen::Index spatial_dims() const { return positions.cols(); }
    Eigen::Index color_dims() const { return colors.cols(); }
};

struct ValidationResult {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationResult validate(const ColoredPointSet& set);

/// Throws std::invalid_argument listing every violated invariant.
void require_valid(const ColoredPointSet& set, const std::string& what);

/// Validating factory; the only sanctioned way to build a set from raw data.
ColoredPointSet make_point_set(Eigen::MatrixXd positions, Eigen::MatrixXd colors);

/// Row n is positions[n] ++ colors[n]; output has D_S + D_C columns.
Eigen::MatrixXd append_channels(const ColoredPointSet& set);

/// Inverse of append_channels given the spatial dimension of the original set.
ColoredPointSet split_channels(const Eigen::MatrixXd& appended, Eigen::Index spatial_dims);

}  // namespace ccpd
