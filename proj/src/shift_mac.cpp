#include "rtsim/shift_mac.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <string>

#include "rtsim/errors.hpp"
#include "rtsim/util.hpp"

namespace rtsim {

void ShiftMacConfig::validate() const {
    if (n_b < 1) throw ConfigError("shift-MAC activation width must be >= 1");
    if (d_max < 1) throw ConfigError("shift-MAC d_max must be >= 1");
    if (result_bits < 0 || result_bits > 62)
        throw ConfigError("shift-MAC result width out of range");
}

int ShiftMacConfig::window_len() const {
    return static_cast<int>(std::bit_ceil(static_cast<unsigned>(n_b)));
}

int ShiftMacConfig::counter_width() const {
    const int j = ceil_log2(static_cast<uint64_t>(window_len()));
    const int traversal = ceil_log2(static_cast<uint64_t>(n_b) + 2 * static_cast<uint64_t>(d_max));
    return std::max(j + 1, traversal);
}

int ShiftMacConfig::derived_result_bits(int k_terms) const {
    return n_b + max_distance() + ceil_log2(static_cast<uint64_t>(std::max(k_terms, 1))) + 1;
}

bool shift_enabled(uint32_t counter_value, const ShiftMacConfig& cfg) {
    const int w = cfg.counter_width();
    const int j = ceil_log2(static_cast<uint64_t>(cfg.window_len()));
    counter_value &= (w >= 32) ? ~0u : ((1u << w) - 1);
    return (counter_value >> j) == (1u << (w - 1 - j));
}

int first_enabled_cycle(int distance, const ShiftMacConfig& cfg) {
    return 1 + distance + cfg.max_distance();
}

void TrackCounter::init(int distance, const ShiftMacConfig& cfg) {
    const int w = cfg.counter_width();
    const uint32_t mask = (w >= 32) ? ~0u : ((1u << w) - 1);
    const uint32_t window_top = (1u << (w - 1)) + static_cast<uint32_t>(cfg.window_len()) - 1;
    value = (window_top + 1 + static_cast<uint32_t>(cfg.max_distance() + distance)) & mask;
    enabled_cycles = 0;
}

void TrackCounter::decrement(const ShiftMacConfig& cfg) {
    const int w = cfg.counter_width();
    const uint32_t mask = (w >= 32) ? ~0u : ((1u << w) - 1);
    value = (value - 1) & mask;
}

ShiftMacUnit::ShiftMacUnit(const ShiftMacConfig& cfg, const AdderEnergyModel& model)
    : cfg_(cfg), model_(model) {
    cfg_.validate();
}

InputMtjState& ShiftMacUnit::fa_state(size_t i) {
    while (fa_states_.size() <= i) fa_states_.emplace_back(model_.mtj_writes_fa);
    return fa_states_[i];
}

int64_t ShiftMacUnit::run(std::span<const ShiftTerm> terms, Ledger& ledger) {
    const int d_cap = cfg_.max_distance();
    std::vector<const ShiftTerm*> active;
    for (const auto& t : terms) {
        if (t.skip) continue;
        if (t.distance < -d_cap || t.distance > d_cap)
            throw DistanceOutOfRange("shift distance " + std::to_string(t.distance) +
                                     " outside +/-" + std::to_string(d_cap));
        active.push_back(&t);
    }

    const uint64_t pass_cycles = latency_cycles(cfg_);
    ledger.latency.add_cycles(Pipeline::ShiftMac, pass_cycles);
    if (active.empty()) return 0;

    const int w_res = cfg_.result_bits > 0 ? cfg_.result_bits
                                           : cfg_.derived_result_bits(static_cast<int>(active.size()));

    // Streamed bit of a track at output position pos: the single separator 0
    // dwells under the port before the enable window, then n_b shifted bits,
    // then the MSB is held once shifting disables (sign extension).
    auto stream_bit = [&](const ShiftTerm& t, int pos) -> uint8_t {
        const int idx = pos - t.distance;
        if (idx < 0) return 0;
        return bit_of(sign_extend(static_cast<uint64_t>(t.activation), cfg_.n_b),
                      std::min(idx, cfg_.n_b - 1));
    };

    // Exact result: contributions below output bit 0 pass under the port
    // before the accumulation window opens and are discarded, which yields
    // per-term floor semantics.
    int64_t result = 0;
    for (const auto* t : active) {
        const int64_t a = sign_extend(static_cast<uint64_t>(t->activation), cfg_.n_b);
        const int64_t v = floor_shift(a, t->distance);
        result += t->negate ? -v : v;
        // access events: the track is shifted and read exactly n_b times,
        // independent of its distance
        ledger.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(cfg_.n_b));
        ledger.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(cfg_.n_b));
    }

    // Adder-tree events: serial chain over the active tracks, streaming for
    // the result window. Negated tracks pass the complement stage first.
    const size_t chain = active.size() - 1;
    if (chain > 0) {
        std::vector<uint8_t> carries(chain, 0);
        for (int pos = 0; pos < w_res; ++pos) {
            uint8_t running = stream_bit(*active[0], pos) ^ (active[0]->negate ? 1 : 0);
            for (size_t i = 0; i < chain; ++i) {
                const uint8_t in =
                    stream_bit(*active[i + 1], pos) ^ (active[i + 1]->negate ? 1 : 0);
                const BitPair r = full_add(running, in, carries[i], fa_state(i), model_, ledger);
                running = r.sum;
                carries[i] = r.carry;
            }
        }
    }

    if (cfg_.charge_result_write) {
        ledger.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(w_res));
        // write-back streams under the second mat adder while the next pass
        // is accessed, so its cycles are hidden
        ledger.latency.add_cycles(Pipeline::SerialAdd, static_cast<uint64_t>(w_res), true);
    }
    return result;
}

int64_t shift_mac(std::span<const ShiftTerm> terms, const ShiftMacConfig& cfg, Ledger& ledger) {
    ShiftMacUnit unit(cfg, AdderEnergyModel{});
    return unit.run(terms, ledger);
}

int64_t shift_mac(std::span<const int64_t> activations, std::span<const int> distances,
                  const ShiftMacConfig& cfg, Ledger& ledger) {
    if (activations.size() != distances.size())
        throw SimError("shift_mac needs one distance per activation");
    std::vector<ShiftTerm> terms(activations.size());
    for (size_t i = 0; i < activations.size(); ++i)
        terms[i] = {activations[i], distances[i], false, false};
    return shift_mac(terms, cfg, ledger);
}

} // namespace rtsim
