#include "ccpd/synth.hpp"

#include "ccpd/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace ccpd {
namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 step; decorrelates the per-stage generators.
    std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void check_in_range(const ColoredPointSet& set, Eigen::Index idx, const char* what) {
    if (idx < 0 || idx >= set.count())
        throw std::invalid_argument(std::string(what) + ": correspondence index out of range");
}

}  // namespace

ColoredPointSet apply_warp(const ColoredPointSet& set, const WarpField& warp) {
    require_valid(set, "apply_warp");
    if (warp.empty()) return set;
    if (warp.control_points.cols() != set.spatial_dims() ||
        warp.amplitudes.rows() != warp.control_points.rows() ||
        warp.amplitudes.cols() != set.spatial_dims())
        throw std::invalid_argument("apply_warp: field dimensions inconsistent");
    if (!(warp.radius > 0.0)) throw std::invalid_argument("apply_warp: radius must be positive");

    const double inv_two_r2 = 1.0 / (2.0 * warp.radius * warp.radius);
    Eigen::MatrixXd out = set.positions;
    for (Eigen::Index p = 0; p < out.rows(); ++p) {
        for (Eigen::Index k = 0; k < warp.control_points.rows(); ++k) {
            const double d2 = (set.positions.row(p) - warp.control_points.row(k)).squaredNorm();
            out.row(p) += std::exp(-d2 * inv_two_r2) * warp.amplitudes.row(k);
        }
    }
    return ColoredPointSet{std::move(out), set.colors};
}

WarpField random_warp(const ColoredPointSet& base, int control_points,
                      double amplitude, double radius, std::uint64_t seed) {
    require_valid(base, "random_warp");
    if (control_points <= 0) throw std::invalid_argument("random_warp: need control points");
    const Eigen::Index dims = base.spatial_dims();
    const Eigen::RowVectorXd lo = base.positions.colwise().minCoeff();
    const Eigen::RowVectorXd hi = base.positions.colwise().maxCoeff();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, amplitude);

    WarpField field;
    field.radius = radius;
    field.control_points.resize(control_points, dims);
    field.amplitudes.resize(control_points, dims);
    for (int k = 0; k < control_points; ++k)
        for (Eigen::Index d = 0; d < dims; ++d)
            field.control_points(k, d) = lo(d) + unit(rng) * (hi(d) - lo(d));
    for (int k = 0; k < control_points; ++k)
        for (Eigen::Index d = 0; d < dims; ++d) field.amplitudes(k, d) = gauss(rng);
    return field;
}

std::pair<ColoredPointSet, CorrespondenceGroundTruth>
remove_points(const ColoredPointSet& set, const CorrespondenceGroundTruth& truth,
              double fraction, std::uint64_t seed, RemovalSide side_of_set) {
    require_valid(set, "remove_points");
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw std::invalid_argument("remove_points: fraction must lie in [0,1)");
    const Eigen::Index n = set.count();
    const Eigen::Index removed = static_cast<Eigen::Index>(fraction * static_cast<double>(n));
    if (removed >= n) throw std::invalid_argument("remove_points: removal would empty the set");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<Eigen::Index> pick(0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<Eigen::Index> keep(order.begin() + removed, order.end());
    std::sort(keep.begin(), keep.end());

    ColoredPointSet out;
    out.positions.resize(static_cast<Eigen::Index>(keep.size()), set.spatial_dims());
    out.colors.resize(static_cast<Eigen::Index>(keep.size()), set.color_dims());
    std::vector<Eigen::Index> remap(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.positions.row(static_cast<Eigen::Index>(i)) = set.positions.row(keep[i]);
        if (set.color_dims() > 0)
            out.colors.row(static_cast<Eigen::Index>(i)) = set.colors.row(keep[i]);
        remap[static_cast<std::size_t>(keep[i])] = static_cast<Eigen::Index>(i);
    }

    CorrespondenceGroundTruth pruned;
    for (const auto& [model_idx, anchor_idx] : truth.pairs) {
        const Eigen::Index old_idx = side_of_set == RemovalSide::model ? model_idx : anchor_idx;
        if (old_idx < 0 || old_idx >= n)
            throw std::invalid_argument("remove_points: correspondence index out of range");
        const Eigen::Index new_idx = remap[static_cast<std::size_t>(old_idx)];
        if (new_idx < 0) continue;
        if (side_of_set == RemovalSide::model)
            pruned.pairs.emplace_back(new_idx, anchor_idx);
        else
            pruned.pairs.emplace_back(model_idx, new_idx);
    }
    return {std::move(out), std::move(pruned)};
}

ColoredPointSet add_color_noise(const ColoredPointSet& set, double snr_db, std::uint64_t seed) {
    require_valid(set, "add_color_noise");
    if (std::isinf(snr_db) && snr_db > 0) return set;  // noise disabled
    if (!std::isfinite(snr_db)) throw std::invalid_argument("add_color_noise: snr must be finite");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd colors = set.colors;
    for (Eigen::Index c = 0; c < colors.cols(); ++c) {
        const double power = colors.col(c).squaredNorm() / static_cast<double>(colors.rows());
        const double noise_std = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
        for (Eigen::Index r = 0; r < colors.rows(); ++r)
            colors(r, c) = std::clamp(colors(r, c) + noise_std * gauss(rng), 0.0, 1.0);
    }
    return ColoredPointSet{set.positions, std::move(colors)};
}

Eigen::VectorXd farthest_corner_color(const ColoredPointSet& set) {
    require_valid(set, "farthest_corner_color");
    const Eigen::Index dims = set.color_dims();
    if (dims <= 0) throw std::invalid_argument("farthest_corner_color: set has no colors");
    Eigen::VectorXd best;
    double best_dist = -1.0;
    // Corners enumerated in lexicographic order, so ties keep the first one.
    for (std::uint64_t mask = 0; mask < (1ULL << dims); ++mask) {
        Eigen::VectorXd corner(dims);
        for (Eigen::Index d = 0; d < dims; ++d)
            corner(d) = (mask >> (dims - 1 - d)) & 1ULL ? 1.0 : 0.0;
        double dist = 0.0;
        for (Eigen::Index r = 0; r < set.count(); ++r)
            dist += (set.colors.row(r).transpose() - corner).norm();
        if (dist > best_dist) {
            best_dist = dist;
            best = corner;
        }
    }
    return best;
}

ColoredPointSet inject_color_outliers(const ColoredPointSet& set, double fraction,
                                      std::uint64_t seed) {
    require_valid(set, "inject_color_outliers");
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw std::invalid_argument("inject_color_outliers: fraction must lie in [0,1]");
    const Eigen::Index n = set.count();
    const Eigen::Index recolored = static_cast<Eigen::Index>(fraction * static_cast<double>(n));
    if (recolored == 0) return set;

    const Eigen::VectorXd outlier_color = farthest_corner_color(set);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<Eigen::Index> pick(0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    Eigen::MatrixXd colors = set.colors;
    for (Eigen::Index i = 0; i < recolored; ++i)
        colors.row(order[static_cast<std::size_t>(i)]) = outlier_color.transpose();
    return ColoredPointSet{set.positions, std::move(colors)};
}

double rms_error(const ColoredPointSet& transformed, const ColoredPointSet& anchor,
                 const CorrespondenceGroundTruth& truth) {
    if (truth.pairs.empty()) throw std::invalid_argument("rms_error: empty ground truth");
    double acc = 0.0;
    for (const auto& [model_idx, anchor_idx] : truth.pairs) {
        check_in_range(transformed, model_idx, "rms_error model");
        check_in_range(anchor, anchor_idx, "rms_error anchor");
        acc += (transformed.positions.row(model_idx) - anchor.positions.row(anchor_idx))
                   .squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(truth.pairs.size()));
}

std::vector<FlowArrow> flow_field(const ColoredPointSet& original_model,
                                  const ColoredPointSet& transformed) {
    if (original_model.count() != transformed.count() ||
        original_model.spatial_dims() != transformed.spatial_dims())
        throw std::invalid_argument("flow_field: count mismatch");
    std::vector<FlowArrow> arrows;
    arrows.reserve(static_cast<std::size_t>(original_model.count()));
    for (Eigen::Index i = 0; i < original_model.count(); ++i)
        arrows.push_back(FlowArrow{
            original_model.positions.row(i).transpose(),
            (transformed.positions.row(i) - original_model.positions.row(i)).transpose()});
    return arrows;
}

ExperimentData materialize(const ExperimentSpec& spec, const ColoredPointSet& base) {
    require_valid(base, "materialize");

    WarpField field = spec.warp;
    if (field.empty() && spec.warp_recipe.control_points > 0)
        field = random_warp(base, spec.warp_recipe.control_points, spec.warp_recipe.amplitude,
                            spec.warp_recipe.radius, mix_seed(spec.seed, 1));

    ExperimentData data;
    data.anchor = base;
    data.model = field.empty() ? base : apply_warp(base, field);
    data.truth.pairs.reserve(static_cast<std::size_t>(base.count()));
    for (Eigen::Index i = 0; i < base.count(); ++i) data.truth.pairs.emplace_back(i, i);

    if (spec.missing_fraction > 0.0) {
        if (spec.removal_side == RemovalSide::anchor) {
            auto [pruned_set, pruned_truth] = remove_points(
                data.anchor, data.truth, spec.missing_fraction, mix_seed(spec.seed, 2),
                RemovalSide::anchor);
            data.anchor = std::move(pruned_set);
            data.truth = std::move(pruned_truth);
        } else {
            auto [pruned_set, pruned_truth] = remove_points(
                data.model, data.truth, spec.missing_fraction, mix_seed(spec.seed, 2),
                RemovalSide::model);
            data.model = std::move(pruned_set);
            data.truth = std::move(pruned_truth);
        }
    }
    if (spec.color_snr_db)
        data.model = add_color_noise(data.model, *spec.color_snr_db, mix_seed(spec.seed, 3));
    if (spec.color_outlier_fraction > 0.0)
        data.model =
            inject_color_outliers(data.model, spec.color_outlier_fraction, mix_seed(spec.seed, 4));
    return data;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ColoredPointSet& base,
                                const RegistrationConfig& config) {
    const ExperimentData data = materialize(spec, base);
    const std::string hash = spec_condition_hash(spec);

    auto score = [&](Method method) {
        const auto start = std::chrono::steady_clock::now();
        const RegistrationReport report =
            run_registration(data.anchor, data.model, config, method);
        const auto stop = std::chrono::steady_clock::now();
        ComparisonRecord record;
        record.spec_hash = hash;
        record.seed = spec.seed;
        record.method = method == Method::ccpd ? "ccpd" : "cpd";
        record.rms = rms_error(report.transformed, data.anchor, data.truth);
        record.iterations = report.iterations;
        record.milliseconds =
            std::chrono::duration<double, std::milli>(stop - start).count();
        return record;
    };

    return ExperimentResult{score(Method::ccpd), score(Method::cpd)};
}

std::string spec_condition_hash(const ExperimentSpec& spec) {
    std::ostringstream text;
    text.precision(17);
    text << "missing=" << spec.missing_fraction
         << ";side=" << (spec.removal_side == RemovalSide::anchor ? "anchor" : "model")
         << ";snr=";
    if (spec.color_snr_db)
        text << *spec.color_snr_db;
    else
        text << "none";
    text << ";outliers=" << spec.color_outlier_fraction;
    text << ";recipe=" << spec.warp_recipe.control_points << "," << spec.warp_recipe.amplitude
         << "," << spec.warp_recipe.radius;
    text << ";warp=" << spec.warp.radius;
    for (Eigen::Index k = 0; k < spec.warp.control_points.rows(); ++k) {
        for (Eigen::Index d = 0; d < spec.warp.control_points.cols(); ++d)
            text << "," << spec.warp.control_points(k, d);
        for (Eigen::Index d = 0; d < spec.warp.amplitudes.cols(); ++d)
            text << "," << spec.warp.amplitudes(k, d);
    }

    // FNV-1a, 64 bit.
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : text.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

ColoredPointSet make_segmented_shape(int total_points, int regions, double row_gap) {
    if (total_points < regions || regions <= 0)
        throw std::invalid_argument("make_segmented_shape: need at least one point per region");
    const int base_count = total_points / regions;
    const int extra = total_points % regions;

    Eigen::MatrixXd positions(total_points, 2);
    Eigen::MatrixXd hues(total_points, 1);
    int row_index = 0;
    for (int r = 0; r < regions; ++r) {
        const int count = base_count + (r < extra ? 1 : 0);
        for (int j = 0; j < count; ++j) {
            double x = count > 1 ? static_cast<double>(j) / (count - 1) : 0.5;
            if (r % 2 == 1) x = 1.0 - x;  // serpentine direction
            positions(row_index, 0) = x;
            positions(row_index, 1) = r * row_gap;
            hues(row_index, 0) = static_cast<double>(r) / regions;
            ++row_index;
        }
    }
    return make_point_set(std::move(positions), hue_to_rgb(hues));
}

}  // namespace ccpd
