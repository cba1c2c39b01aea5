#include "gapforge/cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gapforge;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "gapforge");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name)
{
    return (fs::temp_directory_path() / ("gapforge_cli_" + std::to_string(::getpid()) + "_" + name)).string();
}

std::size_t line_count(const std::string& path)
{
    std::ifstream f(path);
    std::size_t n = 0;
    for (std::string l; std::getline(f, l);)
        ++n;
    return n;
}

} // namespace

TEST_CASE("verify-gaps over [2, 1000)")
{
    const std::string ck = temp_file("vg.jsonl");
    fs::remove(ck);
    const Result r = invoke({"verify-gaps", "--from", "2", "--to", "1000", "--alpha", "3", "--checkpoint", ck});
    CHECK(r.code == 0);
    CHECK(line_count(ck) == 998);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("verified") == 998);
    CHECK(j.at("failed").empty());

    const Result rep = invoke({"report", "--checkpoint", ck});
    CHECK(rep.code == 0);
    const auto rj = nlohmann::json::parse(rep.out);
    CHECK(rj.at("audit").at("ok") == true);
    CHECK(rj.at("range").at("verified") == 998);
    CHECK(invoke({"report", "--checkpoint", ck, "--to", "1010"}).code == 1);
    fs::remove(ck);
}

TEST_CASE("usage errors exit 2")
{
    CHECK(invoke({"verify-gaps", "--from", "100", "--to", "50"}).code == 2);
    CHECK(invoke({"verify-gaps", "--from", "100", "--to", "100"}).code == 2);
    CHECK(invoke({"verify-gaps", "--from", "2", "--to", "50", "--bogus"}).code == 2);
    CHECK(invoke({"verify-gaps", "--from", "x", "--to", "50"}).code == 2);
    CHECK(invoke({"verify-gaps", "--from", "2", "--to", "50", "--alpha", "1"}).code == 2);
    CHECK(invoke({"verify-gaps", "--from", "2", "--to", "50", "--threads", "0"}).code == 2);
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"nonsense"}).code == 2);
    CHECK(invoke({"certify", "--s-grid", "1"}).code == 2);
    CHECK(invoke({"mertens", "--z-lo", "10", "--z-hi", "5", "--eps", "0.1"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("scientific notation and the thread variable")
{
    ::setenv("GAPFORGE_THREADS", "3", 1);
    const Result a = invoke({"verify-gaps", "--from", "1e2", "--to", "2e2"});
    ::unsetenv("GAPFORGE_THREADS");
    const Result b = invoke({"verify-gaps", "--from", "100", "--to", "200"});
    CHECK(a.code == 0);
    auto ja = nlohmann::json::parse(a.out), jb = nlohmann::json::parse(b.out);
    ja.erase("wall_seconds");
    jb.erase("wall_seconds");
    CHECK(ja == jb);
    ::setenv("GAPFORGE_THREADS", "many", 1);
    CHECK(invoke({"verify-gaps", "--from", "2", "--to", "10"}).code == 2);
    ::unsetenv("GAPFORGE_THREADS");
}

TEST_CASE("certify with defaults and a config file")
{
    const Result r = invoke({"certify", "--config", "defaults", "--s-grid", "201"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("verdict") == "certified");
    CHECK(std::stod(j.at("final_coefficient").at("lo").get<std::string>()) >= 0.53);

    const std::string cfg = temp_file("p.conf");
    {
        std::ofstream f(cfg);
        f << defaults_config << "c1_prop = 5000\n";
    }
    const Result bad = invoke({"certify", "--config", cfg, "--s-grid", "21"});
    CHECK(bad.code == 1);
    CHECK(nlohmann::json::parse(bad.out).at("verdict") == "failed");
    CHECK(invoke({"certify", "--n-min", "1e30", "--s-grid", "21"}).code == 1);
    {
        std::ofstream f(cfg);
        f << "nonsense = 1\n";
    }
    CHECK(invoke({"certify", "--config", cfg}).code == 2);
    fs::remove(cfg);
    CHECK(invoke({"certify", "--config", temp_file("missing.conf")}).code == 1);
}

TEST_CASE("mertens windows")
{
    const Result ok = invoke({"mertens", "--z-lo", "3024", "--z-hi", "4000", "--eps", "1.97e-3"});
    CHECK(ok.code == 0);
    CHECK(nlohmann::json::parse(ok.out).at("status") == "verified");
    const Result no = invoke({"mertens", "--z-lo", "10", "--z-hi", "100", "--eps", "0"});
    CHECK(no.code == 1);
    const auto j = nlohmann::json::parse(no.out);
    CHECK(j.at("status") == "refuted");
    CHECK(j.contains("witness"));
}

TEST_CASE("plan output")
{
    const Result r = invoke({"plan", "--n", "10", "--t", "1"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("r") == "13");
    CHECK(j.at("m") == "2");
    CHECK(j.at("candidate_budget") == 8);
    CHECK(invoke({"plan", "--n", "1", "--t", "1"}).code == 1);
}

TEST_CASE("standalone binary")
{
    const std::string out = temp_file("bin.json");
    const std::string cmd = std::string(GAPFORGE_CLI_PATH) + " verify-gaps --from 2 --to 100 --report " + out;
    CHECK(std::system(cmd.c_str()) == 0);
    std::ifstream f(out);
    const auto j = nlohmann::json::parse(f);
    CHECK(j.at("verified") == 98);
    fs::remove(out);
    const std::string bad = std::string(GAPFORGE_CLI_PATH) + " verify-gaps --from 9 --to 3 2>/dev/null";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == 2);
}
