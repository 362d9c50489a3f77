#pragma once

// Text products shared by the CLI and the acceptance suite.

#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmmcredit/cli/io.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/mc.hpp"

namespace hmmcredit::report {

struct Simulation {
    std::string samples_csv;  // path_id,obligor,default_time
    nlohmann::ordered_json summary;
};

inline Simulation simulate(const ModelContext& ctx, double horizon, std::size_t paths, std::uint64_t seed,
                           const SimulationOptions& opt = {}) {
    detail::require(paths >= 2, "simulate: need at least two paths");
    std::ostringstream csv;
    csv << "path_id,obligor,default_time\n";
    const int big_k = ctx.obligor_count();
    std::vector<double> first(paths), count(paths);
    std::vector<std::size_t> by_count(static_cast<std::size_t>(big_k) + 1, 0);
    for (std::size_t p = 0; p < paths; ++p) {
        const SimulatedPath path = simulate_default_times(ctx, horizon, seed, p, opt);
        for (const auto& d : path.defaults) csv << p << "," << d.obligor << "," << io::num(d.time) << "\n";
        first[p] = path.defaults.empty() ? std::numeric_limits<double>::infinity() : path.defaults.front().time;
        count[p] = static_cast<double>(path.defaults.size());
        ++by_count[path.defaults.size()];
    }

    nlohmann::ordered_json s;
    s["paths"] = paths;
    s["seed"] = seed;
    s["horizon"] = horizon;
    s["obligors"] = big_k;
    const Estimate mean = empirical_mean(count);
    s["mean_defaults"] = {{"value", mean.value}, {"std_error", mean.std_error}};
    const Estimate none = empirical_survival(first, horizon);
    s["no_default_by_horizon"] = {{"value", none.value}, {"std_error", none.std_error}};
    auto dist = nlohmann::ordered_json::array();
    for (std::size_t m = 0; m < by_count.size(); ++m) {
        const Estimate e = empirical_proportion(by_count[m], paths);
        dist.push_back({{"defaults", m}, {"value", e.value}, {"std_error", e.std_error}});
    }
    s["default_count_distribution"] = dist;
    return {csv.str(), s};
}

/// `time,p_x0,p_x1`, one row per event plus the horizon.
inline std::string filter_csv(const std::vector<FilterPoint>& points) {
    std::ostringstream out;
    out << "time,p_x0,p_x1\n";
    for (const auto& p : points)
        out << io::num(p.time) << "," << io::num(p.posterior.p0) << "," << io::num(p.posterior.p1) << "\n";
    return out.str();
}

}  // namespace hmmcredit::report
