#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

#include "betaspec/cli.hpp"
#include "betaspec/franck_condon.hpp"
#include "betaspec/fss.hpp"
#include "betaspec/simd/kernels.hpp"

namespace fs = std::filesystem;
using namespace betaspec;

namespace {

class CliTest : public ::testing::Test
{
  protected:
    void SetUp() override
    {
        isa_ = simd::active_isa();
        dir_ = fs::temp_directory_path()
               / ("betaspec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        save_fss(FinalStateSpectrum::from_lines({
                     FssLine{0.0, 0.4, 0, 0, 0},
                     FssLine{0.5, 0.2, 0, 1, 0},
                     FssLine{25.0, 0.3, 1, {}, {}},
                     FssLine{70.0, 0.1, 2, {}, {}},
                 }),
                 path("lines.dat"));
        write("params.json", R"({"amplitude": 1, "W0_eV": 18575, "m2_eV2": 0, "background": 10})");
    }

    void TearDown() override
    {
        simd::set_active_isa(isa_);
        fs::remove_all(dir_);
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write(const std::string& name, const std::string& text) const
    {
        std::ofstream(dir_ / name) << text;
    }

    std::string read(const std::string& name) const
    {
        std::ifstream in(dir_ / name);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static int run(std::vector<std::string> args)
    {
        args.insert(args.begin(), "betaspec");
        return cli::dispatch(args);
    }

    fs::path dir_;
    simd::Isa isa_ = simd::Isa::scalar;
};

std::string small_model()
{
    auto m = default_t2_model();
    m.grid.points = 256;
    m.gate_tolerance_ev = 1e-3;
    return model_to_json(m);
}

}  // namespace

TEST_F(CliTest, UsageErrors)
{
    EXPECT_EQ(run({}), 1);
    EXPECT_EQ(run({"--bogus"}), 1);
    EXPECT_EQ(run({"spectrum", "--fss", path("lines.dat")}), 1);
    EXPECT_EQ(run({"spectrum", "--fss", path("missing.dat"), "--grid", "18500", "--out", path("s.csv")}), 1);
    EXPECT_EQ(run({"fss", "gen", "--out", path("x.dat")}), 1);
    EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(CliTest, ConstantsDump)
{
    ASSERT_EQ(run({"constants", "dump", "--out", path("c.json")}), 0);
    const auto j = nlohmann::json::parse(read("c.json"));
    EXPECT_TRUE(j.contains("fine_structure") || j.contains("alpha"));
    EXPECT_TRUE(fs::exists(path("c.json.manifest.json")));
}

TEST_F(CliTest, FssGenerationAndGate)
{
    write("model.json", small_model());
    ASSERT_EQ(run({"fss", "gen", "--model", path("model.json"), "--q", "18.6", "--jmax", "5", "--out",
                   path("gen.dat")}),
              0);
    const auto fss = load_fss(path("gen.dat"));
    EXPECT_GT(fss.size(), 100u);
    const auto side = nlohmann::json::parse(read("gen.dat.json"));
    EXPECT_EQ(side["j_max"], 5);
    EXPECT_FALSE(side["warnings"].empty());

    auto tight = default_t2_model();
    tight.grid.points = 256;
    tight.gate_tolerance_ev = 1e-14;
    write("tight.json", model_to_json(tight));
    EXPECT_EQ(run({"fss", "gen", "--model", path("tight.json"), "--q", "18.6", "--jmax", "2", "--out",
                   path("tight.dat")}),
              2);
}

TEST_F(CliTest, Moments)
{
    ASSERT_EQ(run({"fss", "moments", "--fss", path("lines.dat"), "--eps", "0,1,30", "--out", path("m.csv")}), 0);
    const auto text = read("m.csv");
    EXPECT_NE(text.find("0,0,absent"), std::string::npos);
    EXPECT_NE(text.find("\n1,0.6,"), std::string::npos);
}

TEST_F(CliTest, SpectrumIsIdempotentAndJobIndependent)
{
    const std::vector<std::string> base{"spectrum", "--fss", path("lines.dat"), "--params", path("params.json"),
                                        "--grid", "18200:18580:0.5"};
    auto a = base;
    a.insert(a.end(), {"--out", path("a.csv")});
    auto b = base;
    b.insert(b.end(), {"--out", path("b.csv"), "--jobs", "3"});
    ASSERT_EQ(run(a), 0);
    const auto first = read("a.csv");
    ASSERT_EQ(run(a), 0);
    EXPECT_EQ(read("a.csv"), first);
    ASSERT_EQ(run(b), 0);
    EXPECT_EQ(read("b.csv"), first);
    auto scalar = base;
    scalar.insert(scalar.end(), {"--out", path("c.csv"), "--simd", "scalar"});
    ASSERT_EQ(run(scalar), 0);
    EXPECT_EQ(read("c.csv").substr(0, 22), first.substr(0, 22));

    const auto m = nlohmann::json::parse(read("b.csv.manifest.json"));
    for (const char* key : {"subcommand", "arguments", "inputs", "inputs_hash", "outputs", "constants_version",
                            "seed", "jobs", "simd", "timestamp"})
        EXPECT_TRUE(m.contains(key)) << key;
    EXPECT_EQ(m["jobs"], 3);
    EXPECT_EQ(m["subcommand"], "spectrum");
}

TEST_F(CliTest, ConvolveAndFit)
{
    ASSERT_EQ(run({"convolve", "--fss", path("lines.dat"), "--params", path("params.json"), "--grid",
                   "18475:18595:1", "--sigma", "1", "--out", path("smeared.csv")}),
              0);
    ASSERT_EQ(run({"convolve", "--fss", path("lines.dat"), "--params", path("params.json"), "--grid",
                   "18475:18595:1", "--exposure", "1e-11", "--seed", "17", "--out", path("data.csv")}),
              0);
    const auto manifest = nlohmann::json::parse(read("data.csv.manifest.json"));
    EXPECT_EQ(manifest["seed"], 17);
    EXPECT_EQ(run({"convolve", "--fss", path("lines.dat"), "--grid", "18500", "--seed", "1", "--out",
                   path("half.csv")}),
              1);

    write("fit.json", R"({"window_eV": [18475, 18595],
        "initial": {"amplitude": 1e-11, "W0_eV": 18575, "m2_eV2": 0, "background": 10}})");
    ASSERT_EQ(run({"fit", "--data", path("data.csv"), "--config", path("fit.json"), "--fss", path("lines.dat"),
                   "--out", path("fit_out.json")}),
              0);
    const auto r = nlohmann::json::parse(read("fit_out.json"));
    EXPECT_TRUE(r["converged"].get<bool>());
    EXPECT_NEAR(r["params"]["W0_eV"].get<double>(), 18575, 1.0);

    write("stall.json", R"({"window_eV": [18475, 18595], "max_iterations": 1,
        "initial": {"amplitude": 1e-11, "W0_eV": 18578, "m2_eV2": 30, "background": 10}})");
    EXPECT_EQ(run({"fit", "--data", path("data.csv"), "--config", path("stall.json"), "--fss", path("lines.dat"),
                   "--out", path("stall_out.json")}),
              2);
}

TEST_F(CliTest, LinearizationStudy)
{
    ASSERT_EQ(run({"fig2", "--fss", path("lines.dat"), "--mnu", "1.0", "--w0", "18575", "--out", path("f.csv")}), 0);
    const auto text = read("f.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 300);
    const auto side = nlohmann::json::parse(read("f.csv.json"));
    EXPECT_TRUE(side["bound_holds_with_envelope"].get<bool>());
    EXPECT_GT(side["envelope_constant"].get<double>(), 0);
}

TEST_F(CliTest, BiasScan)
{
    write("scan.json", R"({"depths_eV": [60, 120], "replications": 3, "exposure": 1e-11,
        "truth": {"amplitude": 1, "W0_eV": 18575, "m2_eV2": 0, "background": 10}})");
    ASSERT_EQ(run({"bias-scan", "--spec", path("scan.json"), "--fss", path("lines.dat"), "--seed", "99", "--out",
                   path("scan.csv")}),
              0);
    const auto text = read("scan.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
    EXPECT_EQ(nlohmann::json::parse(read("scan.csv.manifest.json"))["seed"], 99);
    EXPECT_EQ(nlohmann::json::parse(read("scan.csv.json"))["base_seed"], 99);
}
