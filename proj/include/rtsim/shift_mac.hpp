#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtsim/alu.hpp"
#include "rtsim/ledger.hpp"

namespace rtsim {

// Shift-based multiply-accumulate configuration. d_max = max |distance| + 1.
// Each track's enable window spans exactly the activation word; the counter
// must traverse n_b + 2*d_max distinct states per pass, which sizes its width.
struct ShiftMacConfig {
    int n_b = 8;
    int d_max = 8;
    // Result write-back width; 0 derives the minimal exact width. The system
    // layer pins this to the accumulator width so access energy depends on
    // bit-width only.
    int result_bits = 0;
    // Standalone units charge the result write-back; inside a mat schedule
    // the partial-sum pipeline owns that write.
    bool charge_result_write = true;

    int window_len() const; // bit_ceil(n_b)
    int counter_width() const;
    int max_distance() const { return d_max - 1; }
    int derived_result_bits(int k_terms) const;

    void validate() const;
};

// Decrementing control counter for one track.
struct TrackCounter {
    uint32_t value = 0;
    int enabled_cycles = 0;

    void init(int distance, const ShiftMacConfig& cfg);
    void decrement(const ShiftMacConfig& cfg);
};

// True iff the counter value lies in the shift-enable region: a single
// conjunction over fixed counter bits (top bit set, the bits between it and
// the window field clear).
bool shift_enabled(uint32_t counter_value, const ShiftMacConfig& cfg);

// First cycle (1-based) at which a track with the given distance becomes
// shift-enabled: the most negative supported distance enters on cycle 1.
int first_enabled_cycle(int distance, const ShiftMacConfig& cfg);

struct ShiftTerm {
    int64_t activation = 0;
    int distance = 0;
    bool negate = false; // complement stage with carry-in 1 at the tree input
    bool skip = false;   // zero weight: track contributes nothing
};

// One shift-MAC pass with persistent adder-input state (shift skipping).
class ShiftMacUnit {
public:
    ShiftMacUnit(const ShiftMacConfig& cfg, const AdderEnergyModel& model);

    const ShiftMacConfig& config() const { return cfg_; }

    int64_t run(std::span<const ShiftTerm> terms, Ledger& ledger);

    static uint64_t latency_cycles(const ShiftMacConfig& cfg) {
        return static_cast<uint64_t>(cfg.n_b) + 2 * static_cast<uint64_t>(cfg.max_distance());
    }

private:
    ShiftMacConfig cfg_;
    AdderEnergyModel model_;
    std::vector<InputMtjState> fa_states_;

    InputMtjState& fa_state(size_t i);
};

// Convenience entry points matching the operation contract.
int64_t shift_mac(std::span<const ShiftTerm> terms, const ShiftMacConfig& cfg,
                  Ledger& ledger);
int64_t shift_mac(std::span<const int64_t> activations, std::span<const int> distances,
                  const ShiftMacConfig& cfg, Ledger& ledger);

} // namespace rtsim
