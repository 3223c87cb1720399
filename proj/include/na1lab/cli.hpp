#pragma once

// Command dispatch for the na1lab tool: read a JSON spec, run one analysis,
// write a JSON report (and CSV plot data for two-asset factor models).

#include "na1lab/arbitrage.hpp"
#include "na1lab/errors.hpp"
#include "na1lab/factor.hpp"
#include "na1lab/hedging.hpp"
#include "na1lab/io.hpp"
#include "na1lab/lp.hpp"
#include "na1lab/market.hpp"
#include "na1lab/portfolio.hpp"
#include "na1lab/tree.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace na1lab::cli {

using io::json;

enum class Command { analyze, numeraire, hedge, factor, tree };

inline std::string to_string(Command c) {
    switch (c) {
        case Command::analyze: return "analyze";
        case Command::numeraire: return "numeraire";
        case Command::hedge: return "hedge";
        case Command::factor: return "factor";
        case Command::tree: return "tree";
    }
    return "unknown";
}

inline std::optional<Command> parse_command(const std::string& s) {
    for (Command c : {Command::analyze, Command::numeraire, Command::hedge, Command::factor, Command::tree})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

struct RunConfig {
    Command command = Command::analyze;
    std::string input_path;
    std::string output_path;  // empty writes to stdout
    std::optional<double> tol_lp;
    std::optional<double> tol_opt;
    std::uint64_t seed = 0;
};

enum class Level { error, info, debug };
using Logger = std::function<void(Level, const std::string&)>;

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int parse = 1;
inline constexpr int domain = 2;
inline constexpr int numeric = 3;
}  // namespace exit_code

namespace detail {

inline MaximizeOptions maximize_options(const RunConfig& cfg) {
    MaximizeOptions o;
    if (cfg.tol_opt) o.tol = *cfg.tol_opt;
    return o;
}

inline json analyze(const json& in, const RunConfig&) {
    const auto m = io::read_market(in);
    json out;
    out["market"] = io::write_market(m);
    out["support_size"] = m.support().rows();
    out["span_rank"] = m.subspace().rank;
    const auto arb = find_classical_arbitrage(m);
    out["classical_arbitrage"] = io::write(arb);
    const auto na1 = check_na1(m);
    out["na1"] = io::write(na1);
    out["theta_l_bounded"] = theta_l_bounded(m);
    if (arb.found()) {
        out["esmm"] = nullptr;
        out["esmm_note"] = "classical arbitrage exists, so no supermartingale measure exists";
    } else {
        out["esmm"] = io::write(construct_esmm(m));
    }
    if (in.contains("claim")) {
        const Claim claim{io::read_vector(in.at("claim"), "claim")};
        if (na1.holds()) {
            out["superhedge"] = io::write(superhedge(m, claim));
        } else {
            out["superhedge"] = nullptr;
            out["superhedge_note"] = "NA1 fails, super-hedging values collapse to zero";
        }
    }
    return out;
}

inline json numeraire(const json& in, const RunConfig& cfg) {
    const auto m = io::read_market(in);
    const auto opt = maximize_options(cfg);
    const auto rho = numeraire_portfolio(m, opt);
    json out;
    out["numeraire"] = io::write(rho);
    out["verify_numeraire"] = io::number(verify_numeraire(m, rho.strategy));
    const auto defl = deflator_from_numeraire(m, rho.strategy);
    out["deflator"] = io::vector(defl.values);
    out["deflator_lp_value"] = io::number(defl.lp_value);
    out["expected_deflator"] = io::number(m.probs().dot(defl.values));
    if (in.contains("utility")) {
        const auto u = io::read_utility(in.at("utility"));
        out["utility"] = io::write_utility(u);
        out["utility_optimum"] = io::write(maximize_utility(m, u, opt));
    }
    return out;
}

inline json hedge(const json& in, const RunConfig& cfg) {
    const auto m = io::read_market(in);
    const Claim claim{io::read_vector(io::field(in, "claim", "hedge"), "claim")};
    json out;
    out["superhedge"] = io::write(superhedge(m, claim));
    out["real_world_price"] = io::number(real_world_price(m, claim));
    if (in.contains("shortfall")) {
        const auto& s = in.at("shortfall");
        ShortfallLoss loss = ShortfallLoss::positive_part();
        if (s.contains("loss")) {
            loss.pieces.clear();
            for (const auto& p : s.at("loss")) {
                const auto v = io::read_vector(p, "shortfall.loss");
                if (v.size() != 2) throw io::SchemaError("shortfall.loss: each piece is [slope, intercept]");
                loss.pieces.push_back(Piece{v(0), v(1)});
            }
        }
        const double v0 = io::to_double(io::field(s, "v0", "shortfall"), "shortfall.v0");
        out["shortfall"] = io::write(shortfall_hedge(m, claim, loss, v0));
    }
    if (in.contains("indifference")) {
        const auto& s = in.at("indifference");
        const auto u = io::read_utility(io::field(s, "utility", "indifference"));
        const double v = io::to_double(io::field(s, "v", "indifference"), "indifference.v");
        IndifferenceOptions o;
        if (cfg.tol_opt) o.inner.tol = std::min(o.inner.tol, *cfg.tol_opt);
        out["indifference_price"] = io::number(indifference_price(m, claim, u, v, o));
    }
    return out;
}

inline void write_arbitrage_line_csv(const FactorModel& model, const std::filesystem::path& path) {
    const auto& Q = model.Q();
    const double c = model.c();
    const bool tri = Q.rows() == 2 && Q.cols() == 2 && std::abs(Q(0, 0) - 1) < 1e-12 && Q(1, 0) == 0.0 &&
                     std::abs(Q(1, 1) - 1) < 1e-12;
    const double gamma = Q(0, 1);
    // Arbitrage line: <pi, Q e_2> = 0, i.e. pi2 = -(q12 / q22) pi1.
    const double slope = Q.cols() == 2 && Q(1, 1) != 0.0 ? -Q(0, 1) / Q(1, 1) : std::nan("");
    // The two lines meet at pi1 = c / (1 + slope); plot a little past it.
    const double end = (std::isfinite(slope) && 1.0 + slope > 0.0) ? 1.2 * c / (1.0 + slope) : 1.2 * c;
    std::ofstream f(path);
    if (!f) throw InvalidParameter("factor: cannot write " + path.string());
    f << "pi1,arbitrage_line,borrowing_line,admissible_upper,admissible_lower\n";
    char buf[256];
    for (int i = 0; i <= 200; ++i) {
        const double p1 = end * i / 200.0;
        double up = std::nan(""), lo = std::nan("");
        if (tri) {
            if (gamma >= 0.0 && gamma < 1.0) {
                lo = -gamma * p1;
                up = 1.0 - gamma * p1;
            } else if (gamma >= 1.0) {
                lo = -gamma * p1;
                up = gamma - gamma * p1;
            } else {
                lo = gamma - gamma * p1;
                up = 1.0 - gamma * p1;
            }
        }
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", p1, slope * p1, c - p1, up, lo);
        f << buf;
    }
}

inline json factor(const json& in, const RunConfig& cfg, const Logger& log) {
    const auto model = io::read_factor_model(in);
    json out;
    out["positivity"] = io::write(validate_positivity(model));
    const auto ray = arbitrage_ray(model);
    out["arbitrage_ray"] = ray ? io::vector(*ray) : json();
    if (ray) {
        out["na1"] = na1_factor(model);
        try {
            out["max_arbitrage_strategy"] = io::vector(max_arbitrage_strategy(model));
        } catch (const DomainError& e) {
            out["max_arbitrage_strategy"] = nullptr;
            out["max_arbitrage_note"] = e.what();
        }
    } else {
        out["na1"] = nullptr;
        out["na1_note"] = "e_1 is not in the range of Q', the closed-form criterion does not apply";
    }
    if (na1lab::detail::unit_upper_triangular(model.Q()) && model.dim() <= 30) {
        out["alpha"] = io::vector(alpha_recursion(model.Q()));
        out["na1_triangular"] = na1_triangular(model.Q());
    }
    const int nodes = in.value("nodes", 0);
    if (nodes > 0) {
        const double tm = in.contains("truncation_mass") ? io::to_double(in.at("truncation_mass"), "truncation_mass") : 1e-6;
        const auto disc = discretize(model, nodes, tm);
        json d;
        d["states"] = disc.market.states();
        d["truncated_mass"] = io::number(disc.truncated_mass);
        d["clipped"] = disc.clipped;
        d["provenance"] = disc.provenance;
        const auto na1 = check_na1(disc.market);
        d["na1"] = io::write(na1);
        if (in.value("numeraire", false) && na1.holds()) {
            const auto rho = numeraire_portfolio(disc.market, maximize_options(cfg));
            d["numeraire"] = io::write(rho);
            d["verify_numeraire"] = io::number(verify_numeraire(disc.market, rho.strategy));
        }
        out["discretization"] = d;
    }
    if (model.dim() == 2 && model.factor_count() == 2) {
        const std::filesystem::path dir = cfg.output_path.empty()
                                              ? std::filesystem::current_path()
                                              : std::filesystem::absolute(cfg.output_path).parent_path();
        const auto csv = dir / "arbitrage_line.csv";
        write_arbitrage_line_csv(model, csv);
        out["csv"] = "arbitrage_line.csv";
        log(Level::info, "wrote " + csv.string());
    }
    return out;
}

inline json tree(const json& in, const RunConfig& cfg) {
    const auto t = io::read_tree(in);
    json out;
    out["periods"] = t.depth();
    out["node_count"] = t.size();
    const auto g = global_na1(t);
    json na1;
    na1["holds"] = g.holds;
    na1["failing"] = g.failing;
    na1["nodes"] = json::array();
    for (const auto& c : g.nodes) na1["nodes"].push_back(c ? io::write(*c) : json());
    out["na1"] = na1;
    if (!g.holds) {
        out["policy"] = out["numeraire"] = out["superhedge"] = nullptr;
        out["note"] = "NA1 fails at the listed nodes; optimization and valuation are refused";
        return out;
    }
    const auto mo = maximize_options(cfg);
    const auto np = numeraire_process(t, mo);
    out["numeraire"] = json{{"strategies", io::strategies(np.policy.strategies)},
                            {"wealth", io::vector(np.policy.wealth)},
                            {"deflator", io::vector(np.deflator.values)},
                            {"slack", io::vector(np.deflator.slack)}};
    if (in.contains("utility")) {
        const auto u = io::read_utility(in.at("utility"));
        BackwardOptions bo;
        bo.inner = mo;
        if (in.contains("wealth_grid")) {
            const auto& wg = in.at("wealth_grid");
            if (wg.is_string() && wg.get<std::string>() == "default") {
                bo.wealth_grid = default_wealth_grid(t);
            } else {
                const auto v = io::read_vector(wg, "wealth_grid");
                bo.wealth_grid = std::vector<double>(v.data(), v.data() + v.size());
            }
        }
        const auto r = backward_induction(t, u, bo);
        out["policy"] = json{{"utility", io::write_utility(u)},
                             {"value", io::number(r.value)},
                             {"strategies", io::strategies(r.policy.strategies)},
                             {"wealth", io::vector(r.policy.wealth)},
                             {"node_values", io::vector(r.node_values)},
                             {"interpolation_gap", io::number(r.interpolation_gap)}};
    } else {
        out["policy"] = nullptr;
    }
    if (in.contains("claim")) {
        const auto c = io::read_vector(in.at("claim"), "claim");
        Eigen::VectorXd payoff = Eigen::VectorXd::Zero(t.size());
        const auto leaves = t.leaves();
        if (c.size() == t.size()) {
            payoff = c;
        } else if (c.size() == static_cast<int>(leaves.size())) {
            for (std::size_t i = 0; i < leaves.size(); ++i) payoff(leaves[i]) = c(static_cast<int>(i));
        } else {
            throw io::SchemaError("claim: need one entry per leaf or per node");
        }
        const auto h = superhedge_tree(t, payoff);
        out["superhedge"] = json{{"value", io::number(h.value)},
                                 {"node_values", io::vector(h.node_values)},
                                 {"strategies", io::strategies(h.strategies)}};
    } else {
        out["superhedge"] = nullptr;
    }
    return out;
}

inline std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Runs one command; returns the process exit code. Reports go to the output path (or stdout).
inline int run(const RunConfig& cfg, const Logger& log = [](Level, const std::string&) {}) {
    std::string text;
    json in;
    try {
        if ((cfg.tol_lp && !(*cfg.tol_lp > 0.0)) || (cfg.tol_opt && !(*cfg.tol_opt > 0.0)))
            throw InvalidParameter("tolerances must be positive");
        std::ifstream f(cfg.input_path);
        if (!f) {
            log(Level::error, "cannot open input " + cfg.input_path);
            return exit_code::parse;
        }
        std::stringstream ss;
        ss << f.rdbuf();
        text = ss.str();
        in = json::parse(text);
    } catch (const json::parse_error& e) {
        log(Level::error, cfg.input_path + ": parse error at " + detail::line_column(text, e.byte) + ": " + e.what());
        return exit_code::parse;
    } catch (const InvalidParameter& e) {
        log(Level::error, e.what());
        return exit_code::domain;
    }

    const lp::Options saved = lp::defaults();
    if (cfg.tol_lp) lp::defaults().feasibility_tol = *cfg.tol_lp;
    struct Restore {
        lp::Options o;
        ~Restore() { lp::defaults() = o; }
    } restore{saved};

    log(Level::info, "running " + to_string(cfg.command) + " on " + cfg.input_path);
    json report;
    try {
        switch (cfg.command) {
            case Command::analyze: report = detail::analyze(in, cfg); break;
            case Command::numeraire: report = detail::numeraire(in, cfg); break;
            case Command::hedge: report = detail::hedge(in, cfg); break;
            case Command::factor: report = detail::factor(in, cfg, log); break;
            case Command::tree: report = detail::tree(in, cfg); break;
        }
    } catch (const io::SchemaError& e) {
        log(Level::error, std::string("schema: ") + e.what());
        return exit_code::parse;
    } catch (const json::exception& e) {
        log(Level::error, std::string("schema: ") + e.what());
        return exit_code::parse;
    } catch (const NumericError& e) {
        log(Level::error, std::string("numeric: ") + e.what());
        return exit_code::numeric;
    } catch (const Error& e) {
        log(Level::error, e.what());
        return exit_code::domain;
    }

    json doc;
    doc["command"] = to_string(cfg.command);
    doc["seed"] = cfg.seed;
    doc["report"] = std::move(report);
    const std::string body = doc.dump(2) + "\n";
    if (cfg.output_path.empty()) {
        std::cout << body;
    } else {
        std::ofstream o(cfg.output_path, std::ios::binary);
        if (!o) {
            log(Level::error, "cannot write " + cfg.output_path);
            return exit_code::domain;
        }
        o << body;
        log(Level::info, "wrote " + cfg.output_path);
    }
    return exit_code::ok;
}

}  // namespace na1lab::cli
