#pragma once

// Run configuration: flat INI sections with '#' comments.
//
// [chain]        theta0, theta1, initial_state (0)
// [observation]  eta0_x0, eta0_x1, eta1_x0, eta1_x1, y_initial (0)
// [intensity]    variant (linear | expdecay), a, b, c
// [portfolio]    K
// [pricing]      r, T, t (0), k (1), time_unit (year | day), rate_basis (per_unit | annual),
//                order_statistic (false), series_end (unset: T; last day of value series)
// [numerics]     zeta (1e-3), epsilon (unset: derived from zeta), dist_epsilon (1e-4),
//                quad_rel_tol (1e-6), quad_abs_tol (1e-13), mc_paths (100000), seed (1),
//                horizon (unset: T), paper_literal (false), literal_c (false)
// [validate]     scale (1): multiplier on every acceptance sample size

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hmmcredit/cli/io.hpp"
#include "hmmcredit/dist.hpp"
#include "hmmcredit/error.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/model.hpp"
#include "hmmcredit/pricing.hpp"

namespace hmmcredit {

struct RunConfig {
    double theta0 = 0.0, theta1 = 0.0;
    int initial_state = 0;
    double eta0_x0 = 0.0, eta0_x1 = 0.0, eta1_x0 = 0.0, eta1_x1 = 0.0;
    int y_initial = 0;
    std::string variant = "linear";
    double a = 0.0, b = 0.0, c = 0.0;
    int K = 1;
    double r = 0.0, T = 1.0, t = 0.0;
    int k = 1;
    TimeUnit time_unit = TimeUnit::Year;
    RateBasis rate_basis = RateBasis::PerUnit;
    bool order_statistic = false;
    std::optional<double> series_end;
    double zeta = 1e-3;
    std::optional<double> epsilon;
    double dist_epsilon = 1e-4;
    double quad_rel_tol = 1e-6, quad_abs_tol = 1e-13;
    long long mc_paths = 100000;
    unsigned long long seed = 1;
    std::optional<double> horizon;
    bool paper_literal = false, literal_c = false;
    double validate_scale = 1.0;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    ModelContext context() const {
        ChainSpec chain{theta0, theta1, initial_state};
        ObservationSpec obs{{eta0_x0, eta0_x1}, {eta1_x0, eta1_x1}, y_initial};
        IntensityModel model = variant == "linear" ? IntensityModel(LinearContagion{a, b, c}, K)
                                                   : IntensityModel(ExpDecayContagion{a, b, c}, K);
        ModelContext ctx{chain, obs, std::move(model)};
        ctx.validate();
        return ctx;
    }

    FilterOptions filter_options() const {
        FilterOptions o;
        o.zeta = zeta;
        o.epsilon = epsilon;
        o.paper_literal = paper_literal;
        o.literal_c = literal_c;
        return o;
    }

    DistOptions dist_options() const {
        DistOptions o;
        o.epsilon = dist_epsilon;
        o.tol = {quad_rel_tol, quad_abs_tol};
        o.mc_paths = static_cast<std::size_t>(mc_paths);
        o.seed = seed;
        return o;
    }

    double r_per_unit() const { return rate_per_unit(r, time_unit, rate_basis); }
    double sim_horizon() const { return horizon.value_or(T); }
};

namespace config_detail {

namespace pt = boost::property_tree;

template <class V>
V get(const pt::ptree& tree, const std::string& key, V fallback) {
    const auto node = tree.get_optional<std::string>(key);
    if (!node) return fallback;
    const std::string s = io::detail::trim(*node);
    if constexpr (std::is_same_v<V, bool>) {
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError(key + ": expected true or false, got '" + s + "'");
    } else if constexpr (std::is_same_v<V, std::string>) {
        return s;
    } else {
        std::istringstream in(s);
        in.imbue(std::locale::classic());
        V v{};
        in >> v;
        if (in.fail() || !in.eof()) throw ConfigError(key + ": cannot parse '" + s + "'");
        return v;
    }
}

inline void check_rate(double v, const std::string& key) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError(key + " must be finite and >= 0");
}

}  // namespace config_detail

inline RunConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    using config_detail::get;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    static const char* known[] = {"chain", "observation", "intensity", "portfolio", "pricing", "numerics", "validate"};
    for (const auto& [section, _] : tree) {
        bool ok = false;
        for (const char* k : known) ok = ok || section == k;
        if (!ok) throw ConfigError("config: unknown section [" + section + "]");
    }

    RunConfig c;
    c.theta0 = get(tree, "chain.theta0", c.theta0);
    c.theta1 = get(tree, "chain.theta1", c.theta1);
    c.initial_state = get(tree, "chain.initial_state", c.initial_state);
    c.eta0_x0 = get(tree, "observation.eta0_x0", c.eta0_x0);
    c.eta0_x1 = get(tree, "observation.eta0_x1", c.eta0_x1);
    c.eta1_x0 = get(tree, "observation.eta1_x0", c.eta1_x0);
    c.eta1_x1 = get(tree, "observation.eta1_x1", c.eta1_x1);
    c.y_initial = get(tree, "observation.y_initial", c.y_initial);
    c.variant = get(tree, "intensity.variant", c.variant);
    c.a = get(tree, "intensity.a", c.a);
    c.b = get(tree, "intensity.b", c.b);
    c.c = get(tree, "intensity.c", c.c);
    c.K = get(tree, "portfolio.K", c.K);
    c.r = get(tree, "pricing.r", c.r);
    c.T = get(tree, "pricing.T", c.T);
    c.t = get(tree, "pricing.t", c.t);
    c.k = get(tree, "pricing.k", c.k);
    const std::string unit = get<std::string>(tree, "pricing.time_unit", "year");
    if (unit == "day") c.time_unit = TimeUnit::Day;
    else if (unit == "year") c.time_unit = TimeUnit::Year;
    else throw ConfigError("pricing.time_unit must be day or year");
    const std::string basis = get<std::string>(tree, "pricing.rate_basis", "per_unit");
    if (basis == "per_unit") c.rate_basis = RateBasis::PerUnit;
    else if (basis == "annual") c.rate_basis = RateBasis::Annual;
    else throw ConfigError("pricing.rate_basis must be per_unit or annual");
    c.order_statistic = get(tree, "pricing.order_statistic", c.order_statistic);
    if (tree.get_optional<std::string>("pricing.series_end")) c.series_end = get(tree, "pricing.series_end", 0.0);
    c.zeta = get(tree, "numerics.zeta", c.zeta);
    if (tree.get_optional<std::string>("numerics.epsilon")) c.epsilon = get(tree, "numerics.epsilon", 0.0);
    c.dist_epsilon = get(tree, "numerics.dist_epsilon", c.dist_epsilon);
    c.quad_rel_tol = get(tree, "numerics.quad_rel_tol", c.quad_rel_tol);
    c.quad_abs_tol = get(tree, "numerics.quad_abs_tol", c.quad_abs_tol);
    c.mc_paths = get(tree, "numerics.mc_paths", c.mc_paths);
    c.seed = get(tree, "numerics.seed", c.seed);
    if (tree.get_optional<std::string>("numerics.horizon")) c.horizon = get(tree, "numerics.horizon", 0.0);
    c.paper_literal = get(tree, "numerics.paper_literal", c.paper_literal);
    c.literal_c = get(tree, "numerics.literal_c", c.literal_c);
    c.validate_scale = get(tree, "validate.scale", c.validate_scale);

    using config_detail::check_rate;
    check_rate(c.theta0, "chain.theta0");
    check_rate(c.theta1, "chain.theta1");
    check_rate(c.eta0_x0, "observation.eta0_x0");
    check_rate(c.eta0_x1, "observation.eta0_x1");
    check_rate(c.eta1_x0, "observation.eta1_x0");
    check_rate(c.eta1_x1, "observation.eta1_x1");
    check_rate(c.r, "pricing.r");
    if (c.initial_state != 0 && c.initial_state != 1) throw ConfigError("chain.initial_state must be 0 or 1");
    if (c.y_initial != 0 && c.y_initial != 1) throw ConfigError("observation.y_initial must be 0 or 1");
    if (c.variant != "linear" && c.variant != "expdecay") throw ConfigError("intensity.variant must be linear or expdecay");
    for (double v : {c.a, c.b, c.c})
        if (!std::isfinite(v)) throw ConfigError("intensity coefficients must be finite");
    if (c.K < 1) throw ConfigError("portfolio.K must be >= 1");
    if (!(c.T > 0.0) || !std::isfinite(c.T)) throw ConfigError("pricing.T must be positive");
    if (c.t < 0.0 || c.t > c.T) throw ConfigError("pricing.t must lie in [0, T]");
    if (c.k < 1 || c.k > c.K) throw ConfigError("pricing.k must lie in [1, K]");
    if (c.series_end && (*c.series_end < c.t || *c.series_end > c.T))
        throw ConfigError("pricing.series_end must lie in [t, T]");
    if (!(c.zeta > 0.0)) throw ConfigError("numerics.zeta must be positive");
    if (c.epsilon && !(*c.epsilon > 0.0)) throw ConfigError("numerics.epsilon must be positive");
    if (!(c.dist_epsilon > 0.0)) throw ConfigError("numerics.dist_epsilon must be positive");
    if (!(c.quad_rel_tol > 0.0) || c.quad_abs_tol < 0.0) throw ConfigError("quadrature tolerances must be positive");
    if (c.mc_paths < 1) throw ConfigError("numerics.mc_paths must be >= 1");
    if (c.horizon && !(*c.horizon > 0.0)) throw ConfigError("numerics.horizon must be positive");
    if (!(c.validate_scale > 0.0)) throw ConfigError("validate.scale must be positive");
    try {
        (void)c.context();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_config(in);
}

/// Writes every setting explicitly in shortest round-trip form, so
/// parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
    auto num = [](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    };
    auto b = [](bool v) { return v ? "true" : "false"; };
    std::ostringstream o;
    o << "[chain]\ntheta0 = " << num(c.theta0) << "\ntheta1 = " << num(c.theta1)
      << "\ninitial_state = " << c.initial_state << "\n\n";
    o << "[observation]\neta0_x0 = " << num(c.eta0_x0) << "\neta0_x1 = " << num(c.eta0_x1)
      << "\neta1_x0 = " << num(c.eta1_x0) << "\neta1_x1 = " << num(c.eta1_x1) << "\ny_initial = " << c.y_initial
      << "\n\n";
    o << "[intensity]\nvariant = " << c.variant << "\na = " << num(c.a) << "\nb = " << num(c.b)
      << "\nc = " << num(c.c) << "\n\n";
    o << "[portfolio]\nK = " << c.K << "\n\n";
    o << "[pricing]\nr = " << num(c.r) << "\nT = " << num(c.T) << "\nt = " << num(c.t) << "\nk = " << c.k
      << "\ntime_unit = " << (c.time_unit == TimeUnit::Day ? "day" : "year")
      << "\nrate_basis = " << (c.rate_basis == RateBasis::Annual ? "annual" : "per_unit")
      << "\norder_statistic = " << b(c.order_statistic) << "\n";
    if (c.series_end) o << "series_end = " << num(*c.series_end) << "\n";
    o << "\n";
    o << "[numerics]\nzeta = " << num(c.zeta) << "\n";
    if (c.epsilon) o << "epsilon = " << num(*c.epsilon) << "\n";
    o << "dist_epsilon = " << num(c.dist_epsilon) << "\nquad_rel_tol = " << num(c.quad_rel_tol)
      << "\nquad_abs_tol = " << num(c.quad_abs_tol) << "\nmc_paths = " << c.mc_paths << "\nseed = " << c.seed << "\n";
    if (c.horizon) o << "horizon = " << num(*c.horizon) << "\n";
    o << "paper_literal = " << b(c.paper_literal) << "\nliteral_c = " << b(c.literal_c) << "\n\n";
    o << "[validate]\nscale = " << num(c.validate_scale) << "\n";
    return o.str();
}

}  // namespace hmmcredit
