#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "printmatch/manifest.hpp"
#include "test_util.hpp"

namespace {

const std::filesystem::path& workdir() {
    static const auto dir = testutil::scratch("cli");
    return dir;
}

// runs the CLI with stdout captured to out.txt; returns the exit status
int run(const std::string& args) {
    const std::string cmd = std::string("\"") + PRINTMATCH_CLI + "\" " + args + " > \"" + (workdir() / "out.txt").string() +
                            "\" 2> \"" + (workdir() / "err.txt").string() + "\"";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string output() {
    std::ifstream in(workdir() / "out.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("gen, build-index and match") {
    const auto corpus = workdir() / "corpus";
    REQUIRE(run("gen --products 8 --photos 4 --preset mild --seed 3 --out " + q(corpus)) == 0);
    const auto m = printmatch::load_manifest(corpus);
    CHECK(m.photos().size() == 4);
    CHECK(m.products().size() == 8);

    const auto snap = workdir() / "index.pmix";
    REQUIRE(run("build-index --method gist-none --built-at 2026-01-01T00:00:00Z --corpus " + q(corpus) + " --out " + q(snap)) == 0);
    CHECK(std::filesystem::file_size(snap) > 0);

    const auto photo = m.resolve(m.photos()[0].path);
    REQUIRE(run("match --query " + q(photo) + " --index " + q(snap) + " -k 3") == 0);
    const auto j = nlohmann::json::parse(output());
    CHECK(j["results"].size() == 3);
    CHECK(j["method"] == "gist-none");
    CHECK(j["timings"].contains("total"));
    CHECK_FALSE(j["token"].get<std::string>().empty());

    REQUIRE(run("match --query " + q(photo) + " --index " + q(snap) + " -k 3") == 0);
    const auto again = nlohmann::json::parse(output());
    for (int i = 0; i < 3; ++i) CHECK(again["results"][i]["design_id"] == j["results"][i]["design_id"]);
}

TEST_CASE("segment writes a mask") {
    const auto mask = workdir() / "mask.pgm";
    REQUIRE(run("segment --method gbvs --photo " + q(testutil::fixture("bright_square_128.pgm")) + " --out " + q(mask)) == 0);
    CHECK(std::filesystem::file_size(mask) > 128 * 128);
}

TEST_CASE("argument and input errors") {
    CHECK(run("") != 0);
    CHECK(run("frobnicate") != 0);
    CHECK(run("gen --preset medium --out " + q(workdir() / "x")) != 0);
    CHECK(run("match --query " + q(workdir() / "missing.png") + " --index " + q(workdir() / "missing.pmix")) != 0);
    CHECK(run("build-index --method bogus --corpus " + q(testutil::fixture("mini")) + " --out " + q(workdir() / "y")) == 2);
    CHECK(run("segment --method external:fcn8s --manifest " + q(testutil::fixture("mini") / "manifest.json") +
              " --photo-id p0 --out " + q(workdir() / "z.pgm")) == 3);
}
