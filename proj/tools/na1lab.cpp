#include "na1lab/cli.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace {

spdlog::level::level_enum log_level() {
    const char* env = std::getenv("NA1LAB_LOG");
    const std::string v = env ? env : "error";
    if (v == "debug") return spdlog::level::debug;
    if (v == "info") return spdlog::level::info;
    return spdlog::level::err;
}

}  // namespace

int main(int argc, char** argv) {
    // Reports may go to stdout, so diagnostics stay on stderr.
    auto logger = spdlog::stderr_color_mt("na1lab");
    logger->set_level(log_level());
    logger->set_pattern("[%l] %v");

    CLI::App app{"Finite-state market analysis: arbitrage, NA1, numeraire, hedging"};
    std::string command;
    na1lab::cli::RunConfig cfg;
    double tol_lp = 0.0, tol_opt = 0.0;
    app.add_option("--command", command, "analyze | numeraire | hedge | factor | tree")
        ->required()
        ->check(CLI::IsMember({"analyze", "numeraire", "hedge", "factor", "tree"}));
    app.add_option("--input", cfg.input_path, "input JSON")->required();
    app.add_option("--output", cfg.output_path, "report path (stdout if omitted)");
    auto* lp_opt = app.add_option("--tol-lp", tol_lp, "LP feasibility tolerance");
    auto* opt_opt = app.add_option("--tol-opt", tol_opt, "optimizer stationarity tolerance");
    app.add_option("--seed", cfg.seed, "recorded in the report; all algorithms are deterministic");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : na1lab::cli::exit_code::parse;
    }
    cfg.command = *na1lab::cli::parse_command(command);
    if (*lp_opt) cfg.tol_lp = tol_lp;
    if (*opt_opt) cfg.tol_opt = tol_opt;

    return na1lab::cli::run(cfg, [&](na1lab::cli::Level l, const std::string& msg) {
        switch (l) {
            case na1lab::cli::Level::error: logger->error(msg); break;
            case na1lab::cli::Level::info: logger->info(msg); break;
            case na1lab::cli::Level::debug: logger->debug(msg); break;
        }
    });
}
