#include "ccpd/io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string command = std::string(CCPD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("cli drives the full synth/register/eval/compare/report flow") {
    const fs::path dir = fs::temp_directory_path() / ("ccpd-cli-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto at = [&](const char* name) { return (dir / name).string(); };

    ccpd::write_point_cloud(ccpd::testing::random_cloud(40, 2, 1, 77), at("base.csv"));
    {
        std::ofstream spec(at("exp.spec"));
        spec << "seed=3\nmissing_fraction=0.1\nremoval_side=anchor\n"
             << "warp_control_points=2\nwarp_amplitude=0.05\nwarp_radius=0.5\n";
    }

    CHECK(run_cli("synth --base " + at("base.csv") + " --spec " + at("exp.spec") +
                  " --out-anchor " + at("anchor.csv") + " --out-model " + at("model.csv") +
                  " --out-truth " + at("truth.csv")) == 0);
    CHECK(run_cli("register --anchor " + at("anchor.csv") + " --model " + at("model.csv") +
                  " --set sigma_color=0.1 --out " + at("reg.csv") + " --flow " + at("flow.csv") +
                  " --metrics " + at("metrics.txt") + " --truth " + at("truth.csv")) == 0);
    CHECK(run_cli("eval --transformed " + at("reg.csv") + " --anchor " + at("anchor.csv") +
                  " --truth " + at("truth.csv")) == 0);
    CHECK(run_cli("compare --base " + at("base.csv") + " --spec " + at("exp.spec") +
                  " --set sigma_color=0.1 --out " + at("records.tsv")) == 0);
    CHECK(run_cli("report --in " + at("records.tsv")) == 0);

    CHECK(fs::exists(at("reg.csv")));
    CHECK(fs::exists(at("flow.csv")));
    const auto records = ccpd::read_records(at("records.tsv"));
    CHECK(records.size() == 2);

    std::ifstream metrics(at("metrics.txt"));
    std::string contents((std::istreambuf_iterator<char>(metrics)),
                         std::istreambuf_iterator<char>());
    CHECK(contents.find("rms=") != std::string::npos);
    CHECK(contents.find("iterations=") != std::string::npos);
    CHECK(contents.find("sigma_shape_trace=") != std::string::npos);

    SUBCASE("exit codes distinguish usage from data errors") {
        CHECK(run_cli("register --model " + at("model.csv")) == 1);
        CHECK(run_cli("register --anchor " + at("missing.csv") + " --model " +
                      at("model.csv")) == 2);
        CHECK(run_cli("register --anchor " + at("anchor.csv") + " --model " + at("model.csv") +
                      " --set bogus=1") == 2);
    }

    fs::remove_all(dir);
}
