#include "doctest.h"
#include <filesystem>
#include <fstream>
#include <sstream>

#include "isolab/cli.hpp"

using namespace isolab;

namespace {

std::string cache() {
    return (std::filesystem::temp_directory_path() / "isolab_test_cache").string();
}

struct Run {
    int code;
    nlohmann::json report;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.push_back("--cache-dir");
    args.push_back(cache());
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    nlohmann::json j;
    if (!out.str().empty() && out.str()[0] == '{') j = nlohmann::json::parse(out.str());
    return {code, j, err.str()};
}

}  // namespace

TEST_CASE("j-invariant syntax") {
    auto F = FieldCtx::build(101, 1);
    const Fp2& K = F->f2();
    CHECK(cli::parse_j(K, "17") == F2{17, 0});
    CHECK(cli::parse_j(K, "3+5*s") == F2{3, 5});
    CHECK(cli::parse_j(K, " 3 + 5*s ") == F2{3, 5});
    CHECK(cli::parse_j(K, "205") == F2{3, 0});
    CHECK_THROWS_AS(cli::parse_j(K, "3+5"), Error);
    CHECK_THROWS_AS(cli::parse_j(K, "-4"), Error);
    CHECK_THROWS_AS(cli::parse_j(K, "x"), Error);
    CHECK(cli::parse_digits("0120") == std::vector<int>{0, 1, 2, 0});
    CHECK_THROWS_AS(cli::parse_digits("01a"), Error);
}

TEST_CASE("enumerate") {
    auto r = run({"enumerate", "--p", "31"});
    CHECK(r.code == 0);
    CHECK(r.report["schema"] == "isolab.report.v1");
    CHECK(r.report["results"]["count"] == 3);
    CHECK(r.report["results"]["mass"] == "5/4");
    CHECK(r.report["config"]["options"]["p"] == "31");
    CHECK(r.report["timings"].contains("total_ms"));
    auto big = run({"enumerate", "--p", "1009"});
    CHECK(big.report["results"]["count"] == 84);
    CHECK(big.report["results"]["mass"] == "42");
}

TEST_CASE("usage errors") {
    CHECK(run({"enumerate", "--p", "31", "--bogus"}).code == 1);
    CHECK(run({"enumerate"}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"enumerate", "--p", "33"}).code == 1);
    CHECK(run({"spectra", "report", "--p", "31", "--kind", "bogus"}).code == 1);
    auto r = run({"solve", "isogpath", "--p", "31", "--j1", "5"});
    CHECK(r.code == 1);
    CHECK(r.report["error"]["kind"] == "UnknownCurve");
    CHECK(r.report["status"] == "usage_error");
    std::ostringstream out, err;
    CHECK(cli::run({"verify", "--help"}, out, err) == 0);
    CHECK(out.str().find("lemma-subspace") != std::string::npos);
}

TEST_CASE("verify reports the enumeration honestly") {
    // ell = 3 breaks the 1/2 bound (ratio 2/3): an assertion failure, exit 2
    auto r3 = run({"verify", "lemma-subspace", "--ell", "3"});
    CHECK(r3.code == 2);
    CHECK(r3.report["results"]["max_ratio"] == "2/3");
    CHECK(r3.report["status"] == "assertion_failed");
    auto r5 = run({"verify", "lemma-subspace", "--ell", "5"});
    CHECK(r5.code == 0);
    CHECK(r5.report["results"]["max_ratio"] == "1/3");
    auto b = run({"verify", "basis-probability", "--ell", "3"});
    CHECK(b.code == 0);
    CHECK(b.report["results"]["exact_min"] == "2/9");
    CHECK(run({"verify", "table", "--p", "31"}).code == 0);
}

TEST_CASE("graph and CGL") {
    auto g = run({"graph", "--p", "31", "--ell", "2"});
    CHECK(g.code == 0);
    auto& res = g.report["results"];
    CHECK(res["vertices"].size() == 3);
    CHECK(res["weights"] == nlohmann::json{"1/2", "1/2", "1/4"});
    long total = 0;
    for (auto& e : res["edges"]) total += e["multiplicity"].get<long>();
    CHECK(total == 9);
    auto c = run({"cgl", "--p", "101", "--msg", "0110101"});
    CHECK(c.code == 0);
    CHECK(c.report["results"]["path"]["length"] == 7);
    CHECK(c.report["results"]["path"]["j"].back() == c.report["results"]["hash"]);
    CHECK(run({"cgl", "--p", "101", "--msg", "0120"}).code == 1);
}

TEST_CASE("spectra report") {
    auto r = run({"spectra", "report", "--p", "101", "--N", "3", "--kind", "endmod", "--ell", "2"});
    CHECK(r.code == 0);
    auto& s = r.report["results"]["spectra"][0];
    CHECK(s["components"] == 10);
    CHECK(s["predicted_components"] == 10);
    CHECK(s["ramanujan_ok"] == true);
    CHECK(s["deg_ok"] == true);
    CHECK(r.report["results"]["vertices"].size() == 681);
    auto t = run({"spectra", "report", "--p", "101", "--ell", "2,3", "--delta", "8"});
    CHECK(t.code == 0);
    CHECK(t.report["results"]["spectra"].size() == 2);
    CHECK(t.report["results"]["spectra"][1]["stationary_exact"] == true);
    CHECK(t.report["results"]["delta"]["primes"] == nlohmann::json{2, 3, 5, 7});
}

TEST_CASE("reduction reports") {
    auto r = run({"reduce", "endring", "--p", "101", "--oracle", "stuck:3", "--seed", "2"});
    CHECK(r.code == 0);
    CHECK(r.report["results"]["engine_equal"] == true);
    CHECK(r.report["results"]["index"] == "1");
    CHECK(r.report["results"]["log"]["factor_history"].size() >= 2);
    auto f = run({"reduce", "endring", "--p", "101", "--oracle", "stuck:3", "--seed", "2", "--first-loop-only"});
    CHECK(f.code == 0);
    CHECK(mpz_class(f.report["results"]["index"].get<std::string>()) % 27 == 0);
    CHECK(run({"reduce", "endring", "--p", "101", "--oracle", "sneaky"}).code == 1);
    // an iteration budget that cannot be met is a timeout
    auto t = run({"reduce", "endring", "--p", "31", "--max-iterations", "1"});
    CHECK(t.code == 3);
    CHECK(t.report["status"] == "timeout");
    auto u = run({"solve", "endring-unconditional", "--p", "31", "--j", "23", "--seed", "4"});
    CHECK(u.code == 0);
    CHECK(u.report["results"]["engine_equal"] == true);
}

TEST_CASE("reports replay bit-exactly") {
    auto dir = std::filesystem::temp_directory_path() / "isolab_cli_replay";
    std::filesystem::create_directories(dir);
    auto a = (dir / "a.json").string(), b = (dir / "b.json").string();
    std::ostringstream out, err;
    REQUIRE(cli::run({"solve", "isogpath", "--p", "1009", "--j1", "563+114*s", "--seed", "7", "--threads", "3",
                      "--out", a},
                     out, err) == 0);
    REQUIRE(cli::run({"--replay", a, "--out", b, "--threads", "1"}, out, err) == 0);
    auto ja = nlohmann::json::parse(std::ifstream(a)), jb = nlohmann::json::parse(std::ifstream(b));
    CHECK(ja["results"] == jb["results"]);
    CHECK(ja["seed"] == jb["seed"]);
    CHECK(ja["results"]["path"]["j"].back() == "563+114*s");
    CHECK(cli::run({"--replay", (dir / "missing.json").string()}, out, err) == 1);
    std::filesystem::remove_all(dir);
}
