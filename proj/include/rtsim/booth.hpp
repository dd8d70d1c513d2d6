#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtsim/alu.hpp"
#include "rtsim/ledger.hpp"

namespace rtsim {

// One radix-4 recoded block: overlapping window (b_{2i+1}, b_{2i}, b_{2i-1}).
struct BoothBlock {
    uint8_t b2, b1, b0;

    // Multiplier factor in {-2, -1, 0, +1, +2}.
    int factor() const;
    std::string str() const; // "b2 b1 b0" as a 3-char string, e.g. "110"
    bool operator==(const BoothBlock&) const = default;
};

struct BoothControl {
    bool zero, comp, incr, ls;
    bool operator==(const BoothControl&) const = default;
};

// LSB-first block sequence for an n-bit multiplier (n even), with a zero
// appended below the least significant bit.
std::vector<BoothBlock> booth_recode(int64_t multiplier, int n);

// Control signals; zero has priority over comp, so incr = comp AND NOT zero.
BoothControl booth_decode(const BoothBlock& block);

// One partial product as generated into its racetrack: the stored bits are
// the multiplicand-width window written during generation; the two
// sign-completion bits remain in the generation adder's register tail and
// stream from there during accumulation (`value` carries the exact term).
struct PartialProduct {
    int64_t value = 0; // factor * multiplicand, exact
    int align = 0;     // left-shift positions relative to block 0 (= 2T)
    bool zero = false;
};

// Radix-4 Booth multiplier: bit-parallel multiplier (weight), bit-serial
// multiplicand (activation), n/2 partial-product tracks, serial-adder
// accumulation with per-track shift disable at the MSB for sign extension.
class BoothUnit {
public:
    // multiplier_bits must be even; multiplicand values must fit strictly in
    // multiplicand_bits two's complement.
    BoothUnit(int multiplier_bits, int multiplicand_bits, const AdderEnergyModel& model,
              bool serialize_alignment = false);

    int multiplier_bits() const { return n_; }
    int multiplicand_bits() const { return m_; }
    int product_bits() const { return n_ + m_; }

    // Exact signed product with full event accounting.
    int64_t multiply(int64_t multiplicand, int64_t multiplier, Ledger& ledger);

    std::vector<PartialProduct> gen_partial_products(int64_t multiplicand,
                                                     const std::vector<BoothBlock>& blocks,
                                                     Ledger& ledger);
    int64_t align_accumulate(const std::vector<PartialProduct>& pps, Ledger& ledger);

    // Documented MAC latency: generation (n) + product accumulation (2n) +
    // accumulation with the partner product (2n), plus the alignment walk
    // when it is not overlapped with write-back.
    static uint64_t mac_latency_cycles(int n, bool serialize_alignment = false);

private:
    int n_;
    int m_;
    AdderEnergyModel model_;
    bool serialize_alignment_;
    std::vector<InputMtjState> incr_states_;  // one per partial-product row
    std::vector<InputMtjState> accum_states_; // accumulation chain + final stage
};

} // namespace rtsim
