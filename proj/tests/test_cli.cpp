#include <json.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string exe = INDEFSHOOT_CLI;
const std::string problems = INDEFSHOOT_PROBLEMS_DIR;

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / ("indefshoot_cli_" + std::to_string(::getpid()) + ".log");
    const int st = std::system((exe + " " + args + " > " + log.string() + " 2>&1").c_str());
    Run r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    fs::remove(log);
    return r;
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("indefshoot_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Cli, Version) {
    const auto r = run("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("1.0.0"), std::string::npos);
}

TEST(Cli, ThresholdsLambdaStar) {
    const auto r = run("thresholds --nu0 0.9 --nu1 0.45 --t1 0.5");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("lambda_star            96.06"), std::string::npos) << r.out;
}

TEST(Cli, ThresholdsNecessaryMu) {
    const auto r = run("thresholds --lambda 20");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("neumann_necessary_mu"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find(" 40"), std::string::npos) << r.out;
}

TEST(Cli, AdmissibilityErrorsExitOne) {
    const auto d = scratch("bad");
    std::ofstream(d / "bad.json") << "{\"T\": 3,";
    std::ofstream(d / "sign.json") << R"({"T": 3, "sigma": 0.5, "tau": 2, "weight": {"kind": "sin_pi"}, "g": {"kind": "s2_1ms"}})";
    for (const std::string args :
         {"solve --problem " + (d / "bad.json").string() + " --lambda 1 --mu 3",
          "solve --problem " + (d / "sign.json").string() + " --lambda 1 --mu 3",
          "solve --problem " + (d / "missing.json").string() + " --lambda 1 --mu 3",
          std::string("solve --lambda -1 --mu 3"), std::string("solve --bc robin --lambda 1 --mu 3"),
          std::string("thresholds"), std::string("solve --mu 3"), std::string("bogus")}) {
        const auto r = run(args + " --out " + d.string());
        EXPECT_EQ(r.code, 1) << args << "\n" << r.out;
        EXPECT_FALSE(r.out.empty());
    }
}

TEST(Cli, SolveWritesFiles) {
    const auto d = scratch("solve");
    const auto r = run("solve --bc neumann --lambda 20 --mu 30 --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(slurp(d / "solutions.json"));
    ASSERT_TRUE(j.at("solutions").is_array());
    EXPECT_TRUE(j.at("provenance").contains("config_hash"));
    EXPECT_TRUE(j.at("provenance").at("config").contains("tolerances"));
    for (std::size_t i = 0; i < j.at("solutions").size(); ++i) {
        const auto csv = slurp(d / ("sol_" + std::to_string(i) + ".csv"));
        EXPECT_EQ(csv.rfind("# indefshoot 1.0.0 config_hash=", 0), 0u);
        EXPECT_NE(csv.find("\nt,x,y\n"), std::string::npos);
    }
}

TEST(Cli, ByteIdenticalAcrossThreadCaps) {
    const auto a = scratch("t1"), b = scratch("t4");
    ASSERT_EQ(run("solve --bc neumann --lambda 20 --mu 30 --threads 1 --out " + a.string()).code, 0);
    ASSERT_EQ(run("solve --bc neumann --lambda 20 --mu 30 --threads 4 --out " + b.string()).code, 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
    }
    EXPECT_GE(files, 1u);
}

TEST(Cli, ContinuaWritesFourSets) {
    const auto d = scratch("continua");
    const auto r = run("continua --lambda 1 --mu 1 --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.out;
    for (const char* f : {"continuum_X01_forward.csv", "continuum_X01_backward.csv", "continuum_Y_GE0.csv",
                          "continuum_Y_LE0.csv"})
        EXPECT_NE(slurp(d / f).find("s,x,y,label"), std::string::npos) << f;
}

TEST(Cli, SweepWritesBranchTable) {
    const auto d = scratch("sweep");
    const auto r = run("sweep --lambda 4 --min 0 --max 20 --steps 21 --refine-rounds 0 --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(slurp(d / "branches.csv").find("\nbranch_id,mu,u0,du0,band_l,band_r,tag\n"), std::string::npos);
    const auto j = nlohmann::json::parse(slurp(d / "summary.json"));
    EXPECT_TRUE(j.contains("existence_window"));
}

TEST(Cli, VerifyPasses) {
    const auto d = scratch("verify");
    const auto r = run("verify --lambda 4 --mu 10 --samples 200 --out " + d.string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(d / "verify.json"));
}

TEST(Cli, ProblemFileOption) {
    const auto d = scratch("step");
    const auto r = run("solve --problem " + problems + "/step_two_humps.json --bc neumann --lambda 1 --mu 1 --out "
                       + d.string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(d / "solutions.json"));
}
