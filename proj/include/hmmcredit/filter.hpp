#pragma once

// Posterior of the hidden state given the Y path and the default record,
// updated one event at a time.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hmmcredit/chain.hpp"
#include "hmmcredit/error.hpp"
#include "hmmcredit/model.hpp"

namespace hmmcredit {

/// Observation chain Y. eta0[x] is the y0 -> y1 rate while X = x, eta1[x]
/// the y1 -> y0 rate.
struct ObservationSpec {
    Vec2 eta0{0.0, 0.0};
    Vec2 eta1{0.0, 0.0};
    int y_initial = 0;

    void validate() const {
        for (int x = 0; x <= 1; ++x) {
            detail::require(std::isfinite(eta0[x]) && eta0[x] >= 0.0, "eta0 rates must be finite and >= 0");
            detail::require(std::isfinite(eta1[x]) && eta1[x] >= 0.0, "eta1 rates must be finite and >= 0");
        }
        detail::require(y_initial == 0 || y_initial == 1, "y_initial must be 0 or 1");
    }

    const Vec2& rates_out_of(int y_state) const { return y_state == 0 ? eta0 : eta1; }
    double max_rate() const { return std::max(max_abs(eta0), max_abs(eta1)); }
};

enum class EventKind { YJump, Default };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::YJump;
    int obligor = 0;  // meaningful for defaults only

    static Event yjump(double t) { return {t, EventKind::YJump, 0}; }
    static Event default_of(int obligor, double t) { return {t, EventKind::Default, obligor}; }
    friend bool operator==(const Event&, const Event&) = default;
};

struct EventHistory {
    std::vector<Event> events;
    double horizon = 0.0;

    void validate(int obligor_count) const {
        double prev = 0.0;
        std::vector<int> seen;
        for (std::size_t k = 0; k < events.size(); ++k) {
            const auto& e = events[k];
            detail::require(e.time > prev || (k == 0 && e.time > 0.0),
                            "EventHistory: event times must be positive and strictly increasing");
            prev = e.time;
            if (e.kind == EventKind::Default) {
                detail::require(e.obligor >= 1 && e.obligor <= obligor_count,
                                "EventHistory: default obligor id out of range");
                for (int s : seen) detail::require(s != e.obligor, "EventHistory: obligor defaults twice");
                seen.push_back(e.obligor);
            }
        }
        detail::require(events.empty() || events.back().time <= horizon, "EventHistory: event beyond horizon");
    }
};

struct Posterior {
    double p0 = 1.0;
    double p1 = 0.0;

    Vec2 vec() const { return {p0, p1}; }
    double operator[](int i) const { return i == 0 ? p0 : p1; }
    static Posterior from(const Vec2& v) { return {v[0], v[1]}; }
    static Posterior point_mass(int state) { return state == 0 ? Posterior{1.0, 0.0} : Posterior{0.0, 1.0}; }
};

struct FilterOptions {
    double zeta = 1e-3;
    std::optional<double> epsilon;  // overrides the zeta-derived budget
    /// Multiply separate eta and lambda MGFs instead of one MGF of the sum.
    bool paper_literal = false;
    /// Select eta by the literal parity rule C(n) = 1 iff n + y_initial is even.
    bool literal_c = false;
};

/// Everything the filter and its consumers need about the model.
struct ModelContext {
    ChainSpec chain;
    ObservationSpec obs;
    IntensityModel model;

    void validate() const {
        chain.validate();
        obs.validate();
    }
    int obligor_count() const { return model.obligor_count(); }
};

/// Which eta vector applies after `n_jumps` Y jumps.
inline int eta_index(const ObservationSpec& obs, int n_jumps, bool literal_c = false) {
    const int parity = (n_jumps + obs.y_initial) % 2;
    return literal_c ? 1 - parity : parity;
}

/// Jump rate of Y out of its current state after n_jumps jumps, with X = x.
inline double current_y_rate(const ObservationSpec& obs, int n_jumps, int x, bool literal_c = false) {
    return obs.rates_out_of(eta_index(obs, n_jumps, literal_c))[x];
}

namespace detail {

/// Phi-form factor for "no event" over [s0, s0+t] given the current default
/// set and Y jump count.
inline Mat2 quiet_factor(const ModelContext& ctx, const PortfolioState& port, int n_jumps, double s0, double t,
                         double epsilon, const FilterOptions& opt) {
    const Vec2& eta = ctx.obs.rates_out_of(eta_index(ctx.obs, n_jumps, opt.literal_c));
    if (!opt.paper_literal)
        return phi_inhomogeneous(ctx.chain, survival_rate_function(ctx.model, port, eta), s0, t, epsilon);

    const Mat2 y_part = phi_homogeneous(ctx.chain, eta * -1.0, t);
    const Mat2 d_part = phi_inhomogeneous(ctx.chain, survival_rate_function(ctx.model, port), s0, t, epsilon);
    const Mat2 p = transition_matrix(ctx.chain, t);
    Mat2 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out(i, j) = p(i, j) < 1e-14 ? 0.0 : y_part(i, j) * d_part(i, j) / p(i, j);
    return out;
}

inline Vec2 event_rates(const ModelContext& ctx, const PortfolioState& port, int n_jumps, const Event& e,
                        const FilterOptions& opt) {
    if (e.kind == EventKind::YJump) return ctx.obs.rates_out_of(eta_index(ctx.obs, n_jumps, opt.literal_c));
    return {intensity(ctx.model, e.obligor, e.time, 0, port), intensity(ctx.model, e.obligor, e.time, 1, port)};
}

inline Vec2 normalized(const Vec2& v) {
    const double s = v.sum();
    return {v[0] / s, v[1] / s};
}

}  // namespace detail

/// Rate bound used for the error budget of a segment.
inline double segment_rate_bound(const ModelContext& ctx, const PortfolioState& port) {
    return ctx.obs.max_rate() + port.survivor_count() * ctx.model.lambda_max();
}

/// Per-step error budget for a segment split by an event at offset tbar.
inline double segment_epsilon(const ModelContext& ctx, const PortfolioState& port, double tbar, double seg,
                              const FilterOptions& opt) {
    if (opt.epsilon) return *opt.epsilon;
    return epsilon_for_relative_error(opt.zeta, tbar, seg - tbar, segment_rate_bound(ctx, port)).epsilon;
}

/// Matrix of f^{j,i}: density of `event` at s + tbar together with X_{s+seg}
/// = i, given X_s = j and the record (port, n_jumps) at s.
inline Mat2 event_segment_matrix(const ModelContext& ctx, const PortfolioState& port, int n_jumps, double s,
                                 double seg, const Event& event, double epsilon, const FilterOptions& opt = {}) {
    const double tbar = event.time - s;
    detail::require(tbar > 0.0 && tbar <= seg, "event offset must lie in (0, segment length]");
    if (event.kind == EventKind::Default)
        detail::require(!port.has_defaulted(event.obligor), "event obligor has already defaulted");

    const Mat2 pre = detail::quiet_factor(ctx, port, n_jumps, s, tbar, epsilon, opt);
    const Vec2 rate = detail::event_rates(ctx, port, n_jumps, event, opt);
    Mat2 f = scale_columns(pre, rate);
    if (tbar < seg) {
        const bool jump = event.kind == EventKind::YJump;
        const PortfolioState after = jump ? port : port.with_default(event.obligor, event.time);
        f *= detail::quiet_factor(ctx, after, n_jumps + (jump ? 1 : 0), event.time, seg - tbar, epsilon, opt);
    }
    return f;
}

/// f^{j,i} for a default of `beta` at offset tbar in the segment [s, s+seg].
inline double f_default(int j, int i, int beta, double tbar, double s, double seg, const ModelContext& ctx,
                        const PortfolioState& port, int n_jumps, double epsilon, const FilterOptions& opt = {}) {
    return event_segment_matrix(ctx, port, n_jumps, s, seg, Event::default_of(beta, s + tbar), epsilon, opt)(j, i);
}

/// f^{j,i} for a Y jump at offset sbar in the segment [s, s+seg].
inline double f_yjump(int j, int i, double sbar, double s, double seg, const ModelContext& ctx,
                      const PortfolioState& port, int n_jumps, double epsilon, const FilterOptions& opt = {}) {
    return event_segment_matrix(ctx, port, n_jumps, s, seg, Event::yjump(s + sbar), epsilon, opt)(j, i);
}

/// Two-stage Bayes update: reweight the start-of-segment posterior by the
/// event likelihood, then push it to the segment end.
inline Posterior update_with_matrix(const Posterior& prior, const Mat2& f, std::size_t event_index = 0) {
    const Vec2 row_mass = f.row_sums();
    Vec2 start{prior.p0 * row_mass[0], prior.p1 * row_mass[1]};
    const double evidence = start.sum();
    if (!(evidence > 1e-300) || !std::isfinite(evidence))
        throw DegenerateEvidence("observed event has zero likelihood under the model (event " +
                                     std::to_string(event_index) + ")",
                                 event_index);
    start = start * (1.0 / evidence);

    Vec2 end{0.0, 0.0};
    for (int j = 0; j < 2; ++j) {
        if (start[j] == 0.0) continue;
        for (int i = 0; i < 2; ++i) end[i] += start[j] * f(j, i) / row_mass[j];
    }
    return Posterior::from(detail::normalized(end));
}

/// Incremental filter: posterior at `time` given everything observed so far.
class FilterState {
public:
    FilterState(const ModelContext& ctx, FilterOptions opt = {})
        : ctx_(&ctx), opt_(opt), port_(ctx.obligor_count()),
          posterior_(Posterior::point_mass(ctx.chain.initial_state)) {
        ctx.validate();
    }

    double time() const { return time_; }
    const Posterior& posterior() const { return posterior_; }
    const PortfolioState& portfolio() const { return port_; }
    int y_jumps() const { return y_jumps_; }
    int events_seen() const { return static_cast<int>(events_); }
    const FilterOptions& options() const { return opt_; }

    /// Current Y state (0 or 1) under the model definition of Y.
    int y_state() const { return (ctx_->obs.y_initial + y_jumps_) % 2; }

    void advance(const Event& e) {
        detail::require(e.time > time_, "FilterState: events must be strictly after the current time");
        const double seg = e.time - time_;
        const double eps = segment_epsilon(*ctx_, port_, seg, seg, opt_);
        const Mat2 f = event_segment_matrix(*ctx_, port_, y_jumps_, time_, seg, e, eps, opt_);
        posterior_ = update_with_matrix(posterior_, f, events_);
        if (e.kind == EventKind::YJump)
            ++y_jumps_;
        else
            port_.add_default(e.obligor, e.time);
        time_ = e.time;
        ++events_;
    }

    void advance_no_event(double to) {
        detail::require(to >= time_, "FilterState: cannot move backwards in time");
        if (to == time_) return;
        const double seg = to - time_;
        const double eps = segment_epsilon(*ctx_, port_, seg, seg, opt_);
        const Mat2 q = detail::quiet_factor(*ctx_, port_, y_jumps_, time_, seg, eps, opt_);
        const Vec2 v = posterior_.vec() * q;
        if (!(v.sum() > 1e-300) || !std::isfinite(v.sum()))
            throw DegenerateEvidence("no-event stretch has zero likelihood under the model", events_);
        posterior_ = Posterior::from(detail::normalized(v));
        time_ = to;
    }

private:
    const ModelContext* ctx_;
    FilterOptions opt_;
    double time_ = 0.0;
    PortfolioState port_;
    int y_jumps_ = 0;
    std::size_t events_ = 0;
    Posterior posterior_;
};

/// P(X_t = x | no Y jump and no default in [0, t]).
inline Posterior no_event_posterior(double t, const ModelContext& ctx, const FilterOptions& opt = {}) {
    FilterState st(ctx, opt);
    st.advance_no_event(t);
    return st.posterior();
}

/// Posterior immediately after the event.
inline Posterior update_at_event(const Posterior& prior, const Event& event, double s, const ModelContext& ctx,
                                 const PortfolioState& port, int n_jumps, const FilterOptions& opt = {}) {
    const double seg = event.time - s;
    const double eps = segment_epsilon(ctx, port, seg, seg, opt);
    return update_with_matrix(prior, event_segment_matrix(ctx, port, n_jumps, s, seg, event, eps, opt));
}

struct FilterPoint {
    double time = 0.0;
    Posterior posterior;
};

/// Posterior right after each event, then at the horizon.
inline std::vector<FilterPoint> run_filter(const EventHistory& history, const ModelContext& ctx,
                                           const FilterOptions& opt = {}) {
    history.validate(ctx.obligor_count());
    FilterState st(ctx, opt);
    std::vector<FilterPoint> out;
    out.reserve(history.events.size() + 1);
    for (const auto& e : history.events) {
        st.advance(e);
        out.push_back({st.time(), st.posterior()});
    }
    st.advance_no_event(history.horizon);
    out.push_back({st.time(), st.posterior()});
    return out;
}

/// Filter state at time t after consuming every event at or before t.
inline FilterState filter_until(const EventHistory& history, double t, const ModelContext& ctx,
                                const FilterOptions& opt = {}) {
    FilterState st(ctx, opt);
    for (const auto& e : history.events) {
        if (e.time > t) break;
        st.advance(e);
    }
    st.advance_no_event(t);
    return st;
}

}  // namespace hmmcredit
