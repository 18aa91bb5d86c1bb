// Runs the acceptance criteria and prints one PASS / FAIL line per criterion.
// Exit 0 when every selected criterion passes, 2 otherwise, 1 on usage errors.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "isolab/cli.hpp"

using namespace isolab;

int main(int argc, char** argv) {
    cli::AcceptanceOptions opt;
    std::vector<int> only, skip;
    std::string out;
    CLI::App app{"isolab acceptance criteria"};
    app.add_option("--level", opt.level, "fast (p <= 101) or full (up to 1009)")
        ->check(CLI::IsMember({"fast", "full"}));
    app.add_option("--cache-dir", opt.cache_dir);
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    app.add_option("--skip", skip, "criteria to leave out")->delimiter(',');
    app.add_option("--out", out, "JSON report");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : cli::Exit::usage;
    }
    opt.only.insert(only.begin(), only.end());
    opt.skip.insert(skip.begin(), skip.end());

    std::cout << "acceptance level " << opt.level << "\n";
    auto res = cli::acceptance_suite(opt, &std::cout);
    int passed = 0, failed = 0, skipped = 0;
    nlohmann::json list = nlohmann::json::array();
    for (auto& c : res) {
        (c.skipped ? skipped : c.pass ? passed : failed)++;
        list.push_back({{"id", c.id}, {"title", c.title}, {"status", c.skipped ? "skip" : c.pass ? "pass" : "fail"},
                        {"detail", c.detail}, {"seconds", c.seconds}, {"budget_seconds", c.budget}, {"data", c.data}});
    }
    std::cout << passed << " passed, " << failed << " failed, " << skipped << " skipped\n";
    int code = failed ? cli::Exit::assertion : cli::Exit::ok;
    if (!out.empty()) {
        nlohmann::json rep = {{"schema", cli::kReportSchema},
                              {"subcommand", "acceptance"},
                              {"config", {{"args", std::vector<std::string>(argv + 1, argv + argc)},
                                          {"options", {{"level", opt.level}, {"cache-dir", opt.cache_dir}}}}},
                              {"seed", 0},
                              {"status", failed ? "assertion_failed" : "ok"},
                              {"exit_code", code},
                              {"failures", nlohmann::json::array()},
                              {"results", {{"criteria", list}}},
                              {"timings", nlohmann::json::object()}};
        double total = 0;
        for (auto& c : res) {
            total += c.seconds;
            if (!c.skipped && !c.pass) rep["failures"].push_back("criterion " + std::to_string(c.id));
        }
        rep["timings"]["total_ms"] = 1000 * total;
        std::ofstream(out) << rep.dump(2) << "\n";
    }
    return code;
}
