#pragma once

// Command implementations. Each returns the text of its main product; the
// entry point decides whether it goes to stdout or to --out.

#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmmcredit/cli/config.hpp"
#include "hmmcredit/cli/io.hpp"
#include "hmmcredit/cli/reports.hpp"
#include "hmmcredit/dist.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/mc.hpp"
#include "hmmcredit/pricing.hpp"
#include "hmmcredit/validate/acceptance.hpp"

namespace hmmcredit::cli {

enum ExitCode { kOk = 0, kChecksFailed = 1, kConfigError = 2, kInputError = 3, kNumericalError = 4 };

struct Args {
    std::optional<std::filesystem::path> events;
    std::optional<double> horizon;  // filter: defaults to max(t, last event)
    std::string sweep;              // coef=name:start:stop:steps
    std::string scenario;
    std::vector<double> times;      // density: one time per survivor, obligor order
    bool survival = false;          // density: joint survival instead of density
    std::optional<double> s;        // ordered: target time
};

struct Output {
    std::string text;
    int code = kOk;
};

namespace detail {

inline EventHistory load_history(const Args& a) {
    if (!a.events) return {};
    return io::read_events(*a.events);
}

inline FilterState state_at(const RunConfig& cfg, const ModelContext& ctx, const EventHistory& h, double t) {
    for (const auto& e : h.events)
        if (e.time <= t && e.kind == EventKind::Default && (e.obligor < 1 || e.obligor > cfg.K))
            throw InputError("events: obligor " + std::to_string(e.obligor) + " is outside 1.." + std::to_string(cfg.K));
    return filter_until(h, t, ctx, cfg.filter_options());
}

struct Sweep {
    std::string coef;
    std::vector<double> grid;
};

inline Sweep parse_sweep(const std::string& spec) {
    // coef=a:0.5:1.5:11
    const auto eq = spec.find('=');
    if (eq == std::string::npos || spec.substr(0, eq) != "coef") throw ConfigError("--sweep expects coef=NAME:START:STOP:STEPS");
    std::vector<std::string> part;
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ':')) part.push_back(item);
    if (part.size() != 4) throw ConfigError("--sweep expects coef=NAME:START:STOP:STEPS");
    Sweep out{part[0], {}};
    double start = 0, stop = 0;
    long steps = 0;
    try {
        start = std::stod(part[1]);
        stop = std::stod(part[2]);
        steps = std::stol(part[3]);
    } catch (const std::exception&) {
        throw ConfigError("--sweep: bad number in '" + spec + "'");
    }
    if (steps < 1) throw ConfigError("--sweep: STEPS must be >= 1");
    if (steps > 1 && !(stop > start)) throw ConfigError("--sweep: STOP must exceed START");
    for (long i = 0; i < steps; ++i)
        out.grid.push_back(steps == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(steps - 1));
    return out;
}

}  // namespace detail

inline Output cmd_filter(const RunConfig& cfg, const Args& a) {
    const ModelContext ctx = cfg.context();
    EventHistory h = detail::load_history(a);
    double horizon = a.horizon.value_or(cfg.t);
    if (!a.horizon && !h.events.empty()) horizon = std::max(horizon, h.events.back().time);
    if (!h.events.empty() && h.events.back().time > horizon)
        throw InputError("events extend beyond the horizon " + io::num(horizon));
    h.horizon = horizon;
    try {
        h.validate(cfg.K);
    } catch (const InvalidArgument& e) {
        throw InputError(std::string("events: ") + e.what());
    }
    return {report::filter_csv(run_filter(h, ctx, cfg.filter_options()))};
}

inline Output cmd_price_cds(const RunConfig& cfg, const Args& a) {
    const ModelContext ctx = cfg.context();
    const CdsContract contract{cfg.r_per_unit(), cfg.T};
    CdsOptions opt;
    opt.order_statistic = cfg.order_statistic;
    opt.dist = cfg.dist_options();
    if (!a.sweep.empty()) {
        const auto sw = detail::parse_sweep(a.sweep);
        std::ostringstream out;
        out << "coef,value,premium\n";
        for (const auto& row : premium_sensitivity(contract, ctx, sw.coef, sw.grid, opt))
            out << sw.coef << "," << io::num(row.value) << "," << io::num(row.premium) << "\n";
        return {out.str()};
    }
    nlohmann::ordered_json j;
    j["premium"] = cds_premium(contract, ctx, opt);
    j["r_per_unit"] = contract.r;
    j["expiry"] = contract.expiry;
    j["order_statistic"] = opt.order_statistic;
    return {j.dump(2) + "\n"};
}

inline Output cmd_price_basket(const RunConfig& cfg, const Args& a) {
    const ModelContext ctx = cfg.context();
    EventHistory h = detail::load_history(a);
    const double end = cfg.series_end.value_or(cfg.T);
    h.horizon = std::max(end, h.events.empty() ? 0.0 : h.events.back().time);
    try {
        h.validate(cfg.K);
    } catch (const InvalidArgument& e) {
        throw InputError(std::string("events: ") + e.what());
    }
    std::vector<double> days;
    for (double d = cfg.t; d <= end + 1e-9; d += 1.0) days.push_back(std::min(d, end));
    const std::string label =
        !a.scenario.empty() ? a.scenario : a.events ? a.events->stem().string() : std::string("no_events");
    std::ostringstream out;
    out << "day,value,scenario\n";
    for (const auto& p : basket_value_series({cfg.r_per_unit(), cfg.T, cfg.t, cfg.k}, ctx, h, days,
                                             cfg.filter_options(), cfg.dist_options()))
        out << io::num(p.time) << "," << io::num(p.value) << "," << label << "\n";
    return {out.str()};
}

struct SimulateOutput {
    std::string samples_csv;
    std::string summary;
};

inline SimulateOutput cmd_simulate(const RunConfig& cfg) {
    const ModelContext ctx = cfg.context();
    if (cfg.mc_paths < 2) throw ConfigError("numerics.mc_paths must be at least 2 for simulate");
    const auto r = report::simulate(ctx, cfg.sim_horizon(), static_cast<std::size_t>(cfg.mc_paths), cfg.seed);
    return {r.samples_csv, r.summary.dump(2) + "\n"};
}

inline Output cmd_density(const RunConfig& cfg, const Args& a) {
    const ModelContext ctx = cfg.context();
    const EventHistory h = detail::load_history(a);
    const FilterState fs = detail::state_at(cfg, ctx, h, cfg.t);
    const ConditionalState state = ConditionalState::from(fs);
    const auto survivors = state.portfolio.survivors();
    if (a.times.size() != survivors.size())
        throw InputError("density: give one time per surviving obligor (" + std::to_string(survivors.size()) + ")");
    std::vector<DefaultRecord> assign;
    for (std::size_t i = 0; i < survivors.size(); ++i) assign.push_back({survivors[i], a.times[i]});
    nlohmann::ordered_json j;
    j["t"] = cfg.t;
    j["posterior"] = {state.posterior.p0, state.posterior.p1};
    if (a.survival) {
        const Estimate e = joint_survival(ctx, state, assign, cfg.dist_options());
        j["joint_survival"] = e.value;
        j["std_error"] = e.std_error;
    } else {
        j["joint_density"] = joint_density(ctx, state, assign, cfg.dist_options());
    }
    return {j.dump(2) + "\n"};
}

inline Output cmd_ordered(const RunConfig& cfg, const Args& a) {
    const ModelContext ctx = cfg.context();
    const EventHistory h = detail::load_history(a);
    const ConditionalState state = ConditionalState::from(detail::state_at(cfg, ctx, h, cfg.t));
    const double s = a.s.value_or(cfg.T);
    if (s < cfg.t) throw InputError("ordered: s must be >= t");
    std::ostringstream out;
    out << "k,interval_prob,survival\n";
    const DistOptions opt = cfg.dist_options();
    for (int k = state.portfolio.default_count(); k <= cfg.K; ++k) {
        out << k << "," << io::num(ordered_interval_prob(ctx, state, k, s, opt)) << ",";
        out << (k == 0 ? std::string("") : io::num(ordered_survival(ctx, state, k, s, opt))) << "\n";
    }
    return {out.str()};
}

/// Report to the returned text, runtimes to `timing`.
inline Output cmd_validate(const RunConfig& cfg, std::ostream* timing) {
    validate::RunOptions opt;
    opt.sizes = validate::Sizes{}.scaled(cfg.validate_scale);
    std::ostringstream out;
    const auto results = validate::run_acceptance(opt, out, timing);
    bool all = true;
    for (const auto& r : results) all = all && r.pass;
    return {out.str(), all ? kOk : kChecksFailed};
}

}  // namespace hmmcredit::cli
