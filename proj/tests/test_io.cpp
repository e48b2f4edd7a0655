#include "ccpd/io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ccpd;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ccpd-test-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    out << contents;
}

}  // namespace

TEST_CASE("csv reader handles 8-bit rgb columns") {
    TempDir dir;
    const std::string path = dir.file("cloud.csv");
    write_file(path, "0,0,0,255,0,0\n1,0,0,0,255,0\n");
    const ColoredPointSet set = read_point_cloud(path);
    REQUIRE(set.count() == 2);
    CHECK(set.spatial_dims() == 3);
    CHECK(set.positions.row(0) == Eigen::RowVector3d(0, 0, 0));
    CHECK(set.colors.row(0) == Eigen::RowVector3d(1, 0, 0));
    CHECK(set.colors.row(1) == Eigen::RowVector3d(0, 1, 0));
}

TEST_CASE("csv reader maps column counts onto layouts") {
    TempDir dir;
    const std::string two = dir.file("a.csv");
    write_file(two, "0.5,0.25\n1,2\n");
    CHECK(read_point_cloud(two).color_dims() == 0);
    const std::string three = dir.file("b.csv");
    write_file(three, "0.5,0.25,0.75\n");
    const ColoredPointSet hue2d = read_point_cloud(three);
    CHECK(hue2d.spatial_dims() == 2);
    CHECK(hue2d.color_dims() == 1);
    const std::string four = dir.file("c.csv");
    write_file(four, "0.5,0.25,2.5,0.75\n");
    const ColoredPointSet hue3d = read_point_cloud(four);
    CHECK(hue3d.spatial_dims() == 3);
    CHECK(hue3d.color_dims() == 1);
}

TEST_CASE("csv reader reports the offending line") {
    TempDir dir;
    const std::string path = dir.file("bad.csv");
    write_file(path, "0,0,0.5\n0,oops,0.5\n");
    try {
        read_point_cloud(path);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("ply reader counts vertices and scales byte colors") {
    TempDir dir;
    const std::string path = dir.file("cloud.ply");
    write_file(path,
               "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property uchar red\nproperty uchar green\nproperty uchar blue\n"
               "end_header\n"
               "0 0 0 255 0 0\n1 0 0 0 255 0\n0 1 0 0 0 255\n");
    const ColoredPointSet set = read_point_cloud(path);
    REQUIRE(set.count() == 3);
    CHECK(set.colors(0, 0) == 1.0);
    CHECK(set.colors(1, 1) == 1.0);
    CHECK(set.colors(2, 2) == 1.0);
}

TEST_CASE("pcd packed rgb floats decode bit-exactly") {
    TempDir dir;
    const std::string path = dir.file("cloud.pcd");
    const float red = std::bit_cast<float>(std::uint32_t{0x00FF0000});
    std::ostringstream body;
    body << "VERSION 0.7\nFIELDS x y z rgb\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\n"
         << "WIDTH 1\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 1\nDATA ascii\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(red));
    body << "1 2 3 " << buf << "\n";
    write_file(path, body.str());
    const ColoredPointSet set = read_point_cloud(path);
    REQUIRE(set.count() == 1);
    CHECK(set.colors.row(0) == Eigen::RowVector3d(1, 0, 0));
    CHECK(set.positions.row(0) == Eigen::RowVector3d(1, 2, 3));
}

TEST_CASE("round-trips hold within the stated tolerances") {
    TempDir dir;
    const ColoredPointSet set = testing::random_cloud(10, 3, 3, 101);

    SUBCASE("csv") {
        const std::string path = dir.file("rt.csv");
        write_point_cloud(set, path);
        const ColoredPointSet back = read_point_cloud(path);
        CHECK(testing::max_abs_diff(back.positions, set.positions) < 1e-12);
        CHECK(testing::max_abs_diff(back.colors, set.colors) < 1e-12);
    }
    SUBCASE("ply") {
        const std::string path = dir.file("rt.ply");
        write_point_cloud(set, path);
        const ColoredPointSet back = read_point_cloud(path);
        CHECK(testing::max_abs_diff(back.positions, set.positions) < 1e-6);
        CHECK(testing::max_abs_diff(back.colors, set.colors) <= 0.5 / 255.0 + 1e-12);
    }
    SUBCASE("pcd") {
        const std::string path = dir.file("rt.pcd");
        write_point_cloud(set, path);
        const ColoredPointSet back = read_point_cloud(path);
        CHECK(testing::max_abs_diff(back.positions, set.positions) < 1e-6);
        CHECK(testing::max_abs_diff(back.colors, set.colors) <= 0.5 / 255.0 + 1e-12);
        // Packed colors must survive a second trip untouched.
        const std::string again = dir.file("rt2.pcd");
        write_point_cloud(back, again);
        const ColoredPointSet twice = read_point_cloud(again);
        CHECK(twice.colors == back.colors);
    }
}

TEST_CASE("2D sets are rejected by the 3D-only formats") {
    TempDir dir;
    const ColoredPointSet set = testing::random_cloud(4, 2, 3, 102);
    CHECK_THROWS_WITH_AS(write_point_cloud(set, dir.file("x.ply")), "PLY requires 3D",
                         std::invalid_argument);
    CHECK_THROWS_AS(write_point_cloud(set, dir.file("x.pcd")), std::invalid_argument);
}

TEST_CASE("hue conversions") {
    Eigen::MatrixXd rgb(3, 3);
    rgb << 1, 0, 0, 0, 1, 0, 0, 0, 1;
    const Eigen::MatrixXd hue = rgb_to_hue(rgb);
    CHECK(hue(0, 0) == Approx(0.0));
    CHECK(hue(1, 0) == Approx(1.0 / 3.0));
    CHECK(hue(2, 0) == Approx(2.0 / 3.0));

    // Saturated hues survive the round trip through RGB.
    for (int k = 0; k < 24; ++k) {
        Eigen::MatrixXd h(1, 1);
        h << k / 24.0;
        const double back = rgb_to_hue(hue_to_rgb(h))(0, 0);
        CHECK(back == Approx(h(0, 0)).epsilon(1.0 / 255.0));
    }
    // Achromatic input maps to hue zero.
    Eigen::MatrixXd grey(1, 3);
    grey << 0.5, 0.5, 0.5;
    CHECK(rgb_to_hue(grey)(0, 0) == 0.0);
}

TEST_CASE("uniform downsampling keeps exactly the target") {
    const ColoredPointSet set = testing::random_cloud(1000, 3, 3, 103);
    const ColoredPointSet kept = downsample_uniform(set, 250, 5);
    CHECK(kept.count() == 250);
    const ColoredPointSet all = downsample_uniform(set, 1000, 5);
    CHECK(all.positions == set.positions);
    CHECK_THROWS_AS(downsample_uniform(set, 1001, 5), std::invalid_argument);
}

TEST_CASE("voxel downsampling merges cell mates at their centroid") {
    Eigen::MatrixXd positions(3, 2);
    positions << 0.1, 0.1, 0.3, 0.1, 2.0, 2.0;
    Eigen::MatrixXd colors(3, 1);
    colors << 0.2, 0.4, 1.0;
    const ColoredPointSet set = make_point_set(positions, colors);
    const ColoredPointSet down = downsample_voxel(set, 1.0);
    REQUIRE(down.count() == 2);
    CHECK(down.positions(0, 0) == Approx(0.2));
    CHECK(down.positions(0, 1) == Approx(0.1));
    CHECK(down.colors(0, 0) == Approx(0.3));
}

TEST_CASE("config files round-trip and reject junk") {
    TempDir dir;
    RegistrationConfig config;
    config.alpha = 0.2;
    config.beta = 0.7;
    config.sigma_color = 0.05;
    config.prenormalize = true;
    const std::string path = dir.file("ccpd.conf");
    save_config(config, path);
    const RegistrationConfig back = load_config(path);
    CHECK(back.alpha == config.alpha);
    CHECK(back.beta == config.beta);
    CHECK(back.sigma_color == config.sigma_color);
    CHECK(back.prenormalize == config.prenormalize);

    const std::string bad = dir.file("bad.conf");
    write_file(bad, "alpha=0.2\nbogus_key=1\n");
    CHECK_THROWS_AS(load_config(bad), std::invalid_argument);

    const std::string autos = dir.file("auto.conf");
    write_file(autos, "sigma_color=auto\n");
    CHECK_FALSE(load_config(autos).sigma_color.has_value());
}

TEST_CASE("ground truth files round-trip losslessly") {
    TempDir dir;
    CorrespondenceGroundTruth truth;
    truth.pairs = {{0, 3}, {5, 1}, {2, 2}};
    const std::string path = dir.file("truth.csv");
    write_truth(truth, path);
    const CorrespondenceGroundTruth back = read_truth(path);
    CHECK(back.pairs == truth.pairs);
}

TEST_CASE("experiment spec files load every key") {
    TempDir dir;
    const std::string path = dir.file("exp.spec");
    write_file(path,
               "seed=7\nmissing_fraction=0.22\nremoval_side=anchor\ncolor_snr_db=15\n"
               "color_outlier_fraction=0.05\nwarp_control_points=4\nwarp_amplitude=0.1\n"
               "warp_radius=0.4\n");
    const ExperimentSpec spec = load_experiment_spec(path);
    CHECK(spec.seed == 7);
    CHECK(spec.missing_fraction == Approx(0.22));
    CHECK(spec.removal_side == RemovalSide::anchor);
    CHECK(spec.color_snr_db == Approx(15.0));
    CHECK(spec.color_outlier_fraction == Approx(0.05));
    CHECK(spec.warp_recipe.control_points == 4);

    const std::string none = dir.file("none.spec");
    write_file(none, "color_snr_db=none\nremoval_side=model\n");
    const ExperimentSpec quiet = load_experiment_spec(none);
    CHECK_FALSE(quiet.color_snr_db.has_value());
    CHECK(quiet.removal_side == RemovalSide::model);
}

TEST_CASE("comparison records accumulate by append") {
    TempDir dir;
    const std::string path = dir.file("records.tsv");
    ComparisonRecord a{"deadbeef", 1, "ccpd", 0.001, 40, 12.5};
    ComparisonRecord b{"deadbeef", 1, "cpd", 0.02, 35, 8.25};
    append_records({a}, path);
    append_records({b}, path);
    const std::vector<ComparisonRecord> got = read_records(path);
    REQUIRE(got.size() == 2);
    CHECK(got[0].method == "ccpd");
    CHECK(got[1].method == "cpd");
    CHECK(got[0].rms == Approx(0.001));
    CHECK(got[1].iterations == 35);
}

TEST_CASE("writes replace the target atomically") {
    TempDir dir;
    const std::string path = dir.file("out.txt");
    write_text_atomic(path, "first\n");
    write_text_atomic(path, "second\n");
    std::ifstream in(path);
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(contents == "second\n");
    CHECK_FALSE(fs::exists(path + ".tmp"));
    CHECK_THROWS_AS(write_text_atomic((dir.path / "no-dir" / "x.txt").string(), "x"),
                    std::runtime_error);
}

TEST_CASE("flow csv pads 2D arrows to six columns") {
    TempDir dir;
    std::vector<FlowArrow> arrows;
    arrows.push_back({Eigen::Vector2d(1, 2), Eigen::Vector2d(0.1, -0.2)});
    const std::string path = dir.file("flow.csv");
    write_flow_csv(arrows, path);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "ox,oy,oz,dx,dy,dz");
    CHECK(row == "1,2,0,0.10000000000000001,-0.20000000000000001,0");
}
