#include "qcs/wash.hpp"

#include <algorithm>
#include <cmath>

#include "qcs/errors.hpp"
#include "qcs/rng.hpp"

namespace qcs::wash {
namespace {

// STEP severity: occupancy at the condition threshold maps to level 1,
// occupancy 100% maps to the packet's highest sig level; chunks strictly
// below the level are eligible.
int64_t step_severity(const QualitativePacket& p, const WashContext& ctx) {
    int64_t max_sig = 0;
    for (const auto& d : p.descriptors)
        max_sig = std::max<int64_t>(max_sig, d.sig);
    if (max_sig == 0)
        return 0;
    const double param = p.directive.condition_param;
    if (param >= 100.0)
        return max_sig;
    const double span = (100.0 - param) / static_cast<double>(max_sig);
    const int64_t sev =
        1 + static_cast<int64_t>(std::floor((ctx.queue_occupancy_pct - param) / span));
    return std::clamp<int64_t>(sev, 0, max_sig);
}

// Surviving chunk indices in removal-preference order for the packet's
// q_function. Empty result means nothing is eligible.
std::vector<size_t> eligibility_order(const QualitativePacket& p, const WashContext& ctx,
                                      uint64_t rng_seed) {
    std::vector<size_t> surv;
    surv.reserve(p.descriptors.size());
    for (size_t i = 0; i < p.descriptors.size(); ++i)
        if (!p.descriptors[i].dropped)
            surv.push_back(i);

    const auto by_sig_then_tail = [&p](size_t a, size_t b) {
        const uint8_t sa = p.descriptors[a].sig;
        const uint8_t sb = p.descriptors[b].sig;
        if (sa != sb)
            return sa < sb;
        return a > b; // equal significance: drop from the tail first
    };

    switch (p.directive.q_function) {
    case QFunction::priority_order:
        std::sort(surv.begin(), surv.end(), by_sig_then_tail);
        return surv;
    case QFunction::binary: {
        std::vector<size_t> out;
        for (size_t i : surv)
            if (p.descriptors[i].sig == 0)
                out.push_back(i);
        std::sort(out.begin(), out.end(), std::greater<>());
        return out;
    }
    case QFunction::step: {
        const int64_t sev = step_severity(p, ctx);
        std::vector<size_t> out;
        for (size_t i : surv)
            if (p.descriptors[i].sig < sev)
                out.push_back(i);
        std::sort(out.begin(), out.end(), by_sig_then_tail);
        return out;
    }
    case QFunction::coded_random: {
        SplitMix64 rng(rng_seed);
        for (size_t i = surv.size(); i > 1; --i)
            std::swap(surv[i - 1], surv[rng.next_below(i)]);
        return surv;
    }
    }
    throw Error(Errc::invariant_violation, "unknown q_function");
}

} // namespace

const char* to_string(DropReason r) {
    switch (r) {
    case DropReason::threshold_exceeded:  return "threshold-exceeded";
    case DropReason::deadline_unmeetable: return "deadline-unmeetable";
    case DropReason::nothing_removable:   return "nothing-removable";
    }
    return "?";
}

bool condition_met(const WashDirective& d, const WashContext& ctx) {
    if (d.condition_code == kConditionQueueOccupancyGe)
        return ctx.queue_occupancy_pct >= static_cast<double>(d.condition_param);
    throw Error(Errc::unknown_condition,
                "condition code " + std::to_string(d.condition_code));
}

VictimSelection select_victims(const QualitativePacket& p, const WashContext& ctx,
                               uint64_t rng_seed) {
    VictimSelection out;
    if (ctx.bytes_needed == 0) {
        out.ok = true;
        return out;
    }
    const size_t surviving = p.surviving_count();
    const size_t threshold = p.directive.q_threshold;
    const size_t cap = surviving > threshold ? surviving - threshold : 0;
    const auto order = eligibility_order(p, ctx, rng_seed);
    if (order.empty()) {
        out.fail_reason = DropReason::nothing_removable;
        return out;
    }
    if (cap == 0) {
        out.fail_reason = DropReason::threshold_exceeded;
        return out;
    }
    size_t freed = 0;
    for (size_t idx : order) {
        if (out.victims.size() == cap) {
            // the next removal would leave fewer than q_threshold survivors
            out.victims.clear();
            out.fail_reason = DropReason::threshold_exceeded;
            return out;
        }
        out.victims.push_back(idx);
        freed += p.descriptors[idx].length;
        if (freed >= ctx.bytes_needed) {
            out.ok = true;
            return out;
        }
    }
    out.victims.clear();
    out.fail_reason = DropReason::nothing_removable; // eligible chunks exhausted
    return out;
}

size_t max_washable_bytes(const QualitativePacket& p, const WashContext& ctx,
                          uint64_t rng_seed) {
    const size_t surviving = p.surviving_count();
    const size_t threshold = p.directive.q_threshold;
    const size_t cap = surviving > threshold ? surviving - threshold : 0;
    if (cap == 0)
        return 0;
    const auto order = eligibility_order(p, ctx, rng_seed);
    size_t total = 0;
    for (size_t i = 0; i < order.size() && i < cap; ++i)
        total += p.descriptors[order[i]].length;
    return total;
}

WashOutcome wash(const QualitativePacket& p, const WashContext& ctx, uint64_t rng_seed) {
    WashOutcome out;
    if (!condition_met(p.directive, ctx))
        return out; // forward_unchanged

    if (p.directive.deadline_us > 0 &&
        ctx.now_us + ctx.residual_path_latency_us > p.directive.deadline_us) {
        out.kind = WashOutcome::Kind::drop;
        out.reason = DropReason::deadline_unmeetable;
        return out;
    }
    if (ctx.bytes_needed == 0)
        return out; // fits as-is

    auto sel = select_victims(p, ctx, rng_seed);
    if (!sel.ok) {
        out.kind = WashOutcome::Kind::drop;
        out.reason = sel.fail_reason;
        return out;
    }

    QualitativePacket washed = p;
    for (size_t idx : sel.victims) {
        washed.descriptors[idx].dropped = true;
        washed.descriptors[idx].offset = kDroppedOffset;
    }
    washed.payload.clear();
    uint16_t offset = 0;
    for (size_t i = 0; i < washed.descriptors.size(); ++i) {
        auto& d = washed.descriptors[i];
        if (d.dropped)
            continue;
        const auto bytes = wire::chunk_bytes(p, i);
        washed.payload.insert(washed.payload.end(), bytes.begin(), bytes.end());
        d.offset = offset;
        offset = static_cast<uint16_t>(offset + d.length);
    }
    washed.washed = true;
    washed.tos = static_cast<uint8_t>(std::min<int>(p.tos + 1, 7));

    out.kind = WashOutcome::Kind::forward_washed;
    out.packet = std::move(washed);
    return out;
}

double quality_of_packet(const QualitativePacket& p) {
    const size_t total_chunks = p.descriptors.size();
    if (p.directive.q_function == QFunction::coded_random)
        return static_cast<double>(p.surviving_count()) / static_cast<double>(total_chunks);
    uint64_t sig_all = 0;
    uint64_t sig_surviving = 0;
    for (const auto& d : p.descriptors) {
        sig_all += d.sig;
        if (!d.dropped)
            sig_surviving += d.sig;
    }
    if (sig_all == 0) // all-zero significance: fall back to the count ratio
        return static_cast<double>(p.surviving_count()) / static_cast<double>(total_chunks);
    return static_cast<double>(sig_surviving) / static_cast<double>(sig_all);
}

} // namespace qcs::wash
