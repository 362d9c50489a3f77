#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hmmcredit/cli/commands.hpp"

using namespace hmmcredit;

namespace {

struct Global {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool paper_literal = false;
    bool literal_c = false;
};

void emit(const std::string& text, const std::string& out) {
    if (out.empty())
        std::cout << text << std::flush;
    else
        io::write_file(out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hidden-regime contagion credit model: filtering, default distributions, simulation, pricing"};
    app.require_subcommand(1);
    app.fallthrough();

    Global g;
    app.add_option("--config", g.config, "Configuration file (INI)")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Override numerics.seed");
    app.add_option("--out", g.out, "Write the main output here instead of stdout");
    app.add_flag("--paper-literal", g.paper_literal, "Separated eta and lambda MGFs in the filter");
    app.add_flag("--literal-c", g.literal_c, "Literal parity rule for the Y-rate selector");

    cli::Args args;
    std::string events;
    auto add_events = [&](CLI::App* sub) {
        sub->add_option("--events", events, "Event history CSV (time,kind,obligor)")->check(CLI::ExistingFile);
    };

    auto* filter = app.add_subcommand("filter", "Posterior of the hidden state after each event");
    add_events(filter);
    filter->add_option("--horizon", args.horizon, "Final time (default: max(t, last event))");

    auto* cds = app.add_subcommand("price-cds", "CDS premium rate, or a coefficient sweep");
    cds->add_option("--sweep", args.sweep, "coef=NAME:START:STOP:STEPS");

    auto* basket = app.add_subcommand("price-basket", "Daily kth-to-default basket values");
    add_events(basket);
    basket->add_option("--scenario", args.scenario, "Label for the scenario column");

    auto* simulate = app.add_subcommand("simulate", "Total-hazard simulation of default times");
    std::string summary_path;
    simulate->add_option("--summary", summary_path, "Write the JSON summary here instead of stdout");

    auto* density = app.add_subcommand("density", "Joint density (or joint survival) of the survivors' default times");
    add_events(density);
    density->add_option("--times", args.times, "One time per surviving obligor, in obligor order")->delimiter(',');
    density->add_flag("--survival", args.survival, "Joint survival probability instead of the density");

    auto* ordered = app.add_subcommand("ordered", "Ordered default-time distribution at time s");
    add_events(ordered);
    ordered->add_option("--s", args.s, "Target time (default T)");

    auto* validate = app.add_subcommand("validate", "Run the acceptance checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kConfigError;
    }
    if (!events.empty()) args.events = events;

    try {
        RunConfig cfg = load_config(g.config);
        if (g.seed) cfg.seed = *g.seed;
        cfg.paper_literal = cfg.paper_literal || g.paper_literal;
        cfg.literal_c = cfg.literal_c || g.literal_c;

        cli::Output result;
        if (*filter) {
            result = cli::cmd_filter(cfg, args);
        } else if (*cds) {
            result = cli::cmd_price_cds(cfg, args);
        } else if (*basket) {
            result = cli::cmd_price_basket(cfg, args);
        } else if (*simulate) {
            const auto sim = cli::cmd_simulate(cfg);
            if (g.out.empty()) {
                std::cout << sim.samples_csv;
                if (summary_path.empty()) std::cerr << sim.summary;
            } else {
                io::write_file(g.out, sim.samples_csv);
                if (summary_path.empty()) std::cout << sim.summary;
            }
            if (!summary_path.empty()) io::write_file(summary_path, sim.summary);
            return cli::kOk;
        } else if (*density) {
            result = cli::cmd_density(cfg, args);
        } else if (*ordered) {
            result = cli::cmd_ordered(cfg, args);
        } else if (*validate) {
            result = cli::cmd_validate(cfg, &std::cerr);
        }
        emit(result.text, g.out);
        return result.code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kConfigError;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return cli::kInputError;
    } catch (const DegenerateEvidence& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return cli::kNumericalError;
    } catch (const DegenerateDenominator& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return cli::kNumericalError;
    } catch (const BudgetExceeded& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return cli::kNumericalError;
    } catch (const InvalidArgument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return cli::kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kInputError;
    }
}
