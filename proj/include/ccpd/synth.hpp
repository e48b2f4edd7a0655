#pragma once

#include "ccpd/config.hpp"
#include "ccpd/point_set.hpp"
#include "ccpd/registration.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ccpd {

/// Known true matches as (model index, anchor index) pairs.
struct CorrespondenceGroundTruth {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
};

/// Smooth Gaussian-RBF displacement field: control points (K x D_S) with
/// per-control amplitudes (K x D_S) and a shared radius.
struct WarpField {
    Eigen::MatrixXd control_points;
    Eigen::MatrixXd amplitudes;
    double radius = 1.0;

    bool empty() const { return control_points.rows() == 0; }
};

/// Recipe for deriving a random field from the experiment seed; used when
/// no explicit field is given.
struct WarpRecipe {
    int control_points = 0;
    double amplitude = 0.0;
    double radius = 0.0;
};

enum class RemovalSide { anchor, model };

struct ExperimentSpec {
    std::uint64_t seed = 0;
    double missing_fraction = 0.0;
    RemovalSide removal_side = RemovalSide::anchor;
    std::optional<double> color_snr_db;   // empty = no color noise
    double color_outlier_fraction = 0.0;
    WarpField warp;                       // explicit field wins over the recipe
    WarpRecipe warp_recipe;
};

struct ExperimentData {
    ColoredPointSet anchor;
    ColoredPointSet model;
    CorrespondenceGroundTruth truth;
};

/// One row of the comparison table.
struct ComparisonRecord {
    std::string spec_hash;
    std::uint64_t seed = 0;
    std::string method;
    double rms = 0.0;
    int iterations = 0;
    double milliseconds = 0.0;
};

struct ExperimentResult {
    ComparisonRecord ccpd;
    ComparisonRecord cpd;
};

/// Displaces positions by the RBF field; colors untouched, correspondences
/// stay the identity map.
ColoredPointSet apply_warp(const ColoredPointSet& set, const WarpField& warp);

/// Seeded random field: control points uniform over the set's bounding box,
/// amplitudes Gaussian with the given scale.
WarpField random_warp(const ColoredPointSet& base, int control_points,
                      double amplitude, double radius, std::uint64_t seed);

/// Removes floor(fraction * count) seeded-random points from `set` and prunes
/// the ground truth; `side_of_set` states which pair component indexes `set`.
std::pair<ColoredPointSet, CorrespondenceGroundTruth>
remove_points(const ColoredPointSet& set, const CorrespondenceGroundTruth& truth,
              double fraction, std::uint64_t seed, RemovalSide side_of_set);

/// Adds per-channel Gaussian noise at the given SNR (dB, power convention:
/// channel mean square over the set), clamped back to [0,1].
ColoredPointSet add_color_noise(const ColoredPointSet& set, double snr_db, std::uint64_t seed);

/// Corner of [0,1]^{D_C} maximizing the summed distance to all present
/// colors; ties resolved toward the lexicographically smallest corner.
Eigen::VectorXd farthest_corner_color(const ColoredPointSet& set);

/// Recolors floor(fraction * count) seeded-random points to the farthest
/// corner color; positions untouched.
ColoredPointSet inject_color_outliers(const ColoredPointSet& set, double fraction, std::uint64_t seed);

/// Root mean square distance between transformed model points and their true
/// anchor matches.
double rms_error(const ColoredPointSet& transformed, const ColoredPointSet& anchor,
                 const CorrespondenceGroundTruth& truth);

struct FlowArrow {
    Eigen::VectorXd origin;
    Eigen::VectorXd displacement;
};

/// Per-point arrows (y_i, t_i - y_i) for plotting/export.
std::vector<FlowArrow> flow_field(const ColoredPointSet& original_model,
                                  const ColoredPointSet& transformed);

/// Builds the anchor/model pair and ground truth described by the spec.
ExperimentData materialize(const ExperimentSpec& spec, const ColoredPointSet& base);

/// Registers with both methods and scores them against the ground truth.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ColoredPointSet& base,
                                const RegistrationConfig& config);

/// Digest of everything in the spec except the seed, so repeated seeds of one
/// condition aggregate together.
std::string spec_condition_hash(const ExperimentSpec& spec);

/// Serpentine 2D test shape: `regions` stacked rows of points, row k colored
/// with the saturated RGB rendering of hue k/regions.
ColoredPointSet make_segmented_shape(int total_points, int regions, double row_gap = 0.08);

}  // namespace ccpd
