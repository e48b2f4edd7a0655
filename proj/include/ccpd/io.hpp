#pragma once

#include "ccpd/config.hpp"
#include "ccpd/point_set.hpp"
#include "ccpd/registration.hpp"
#include "ccpd/synth.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ccpd {

enum class CloudFormat { auto_detect, csv, ply, pcd };

/// Reads CSV (x y [z] + h | r g b), ASCII PLY, or ASCII PCD with packed-float
/// rgb. Colors come back normalized to [0,1]; auto_detect goes by extension.
ColoredPointSet read_point_cloud(const std::string& path, CloudFormat hint = CloudFormat::auto_detect);

/// Writes the set in the requested format (auto_detect = by extension).
/// All writes go through a temp file + rename.
void write_point_cloud(const ColoredPointSet& set, const std::string& path,
                       CloudFormat format = CloudFormat::auto_detect);

/// Standard HSV hue as a fraction in [0,1); achromatic rows map to 0.
Eigen::MatrixXd rgb_to_hue(const Eigen::MatrixXd& rgb);

/// Saturated (S=V=1) rendering of hue fractions as RGB rows.
Eigen::MatrixXd hue_to_rgb(const Eigen::MatrixXd& hue);

/// Keeps exactly `target` seeded-random points, original order preserved.
ColoredPointSet downsample_uniform(const ColoredPointSet& set, Eigen::Index target, std::uint64_t seed);

/// One representative per occupied grid cell: centroid position, mean color.
ColoredPointSet downsample_voxel(const ColoredPointSet& set, double cell_size);

/// Flat key=value config file; unknown keys are errors.
RegistrationConfig load_config(const std::string& path);
void save_config(const RegistrationConfig& config, const std::string& path);

/// Applies one key=value pair onto the config (shared by file loader and CLI
/// overrides); throws std::invalid_argument on unknown keys or bad values.
void apply_config_entry(RegistrationConfig& config, const std::string& key, const std::string& value);

/// Ground-truth files: CSV "model_index,anchor_index" rows.
CorrespondenceGroundTruth read_truth(const std::string& path);
void write_truth(const CorrespondenceGroundTruth& truth, const std::string& path);

/// Experiment spec files, key=value (see README for the key list).
ExperimentSpec load_experiment_spec(const std::string& path);

/// Comparison records: tab-separated rows of
/// spec_hash seed method rms iterations milliseconds.
std::vector<ComparisonRecord> read_records(const std::string& path);
void append_records(const std::vector<ComparisonRecord>& records, const std::string& path);

/// Flow arrows as CSV ox,oy,oz,dx,dy,dz (2D data zero-padded).
void write_flow_csv(const std::vector<FlowArrow>& arrows, const std::string& path);

/// Atomic text write used by every writer here: temp file in the same
/// directory, then rename over the target.
void write_text_atomic(const std::string& path, const std::string& contents);

}  // namespace ccpd
