#include "rtsim/booth.hpp"

#include <cassert>

#include "rtsim/errors.hpp"
#include "rtsim/util.hpp"

namespace rtsim {

int BoothBlock::factor() const {
    const int code = (b2 << 2) | (b1 << 1) | b0;
    switch (code) {
        case 0b000: return 0;
        case 0b001: return 1;
        case 0b010: return 1;
        case 0b011: return 2;
        case 0b100: return -2;
        case 0b101: return -1;
        case 0b110: return -1;
        case 0b111: return 0;
    }
    return 0;
}

std::string BoothBlock::str() const {
    return {static_cast<char>('0' + b2), static_cast<char>('0' + b1),
            static_cast<char>('0' + b0)};
}

std::vector<BoothBlock> booth_recode(int64_t multiplier, int n) {
    if (n < 2 || n % 2 != 0) throw SimError("booth recode needs an even multiplier width");
    std::vector<BoothBlock> blocks;
    blocks.reserve(static_cast<size_t>(n / 2));
    for (int i = 0; i < n / 2; ++i) {
        const uint8_t lo = (i == 0) ? 0 : bit_of(multiplier, 2 * i - 1);
        blocks.push_back({bit_of(multiplier, 2 * i + 1), bit_of(multiplier, 2 * i), lo});
    }
    return blocks;
}

BoothControl booth_decode(const BoothBlock& b) {
    const bool all1 = b.b2 && b.b1 && b.b0;
    const bool all0 = !b.b2 && !b.b1 && !b.b0;
    BoothControl c;
    c.zero = all1 || all0;
    c.comp = b.b2;
    c.incr = c.comp && !c.zero;
    c.ls = (b.b2 && !b.b1 && !b.b0) || (!b.b2 && b.b1 && b.b0);
    return c;
}

BoothUnit::BoothUnit(int multiplier_bits, int multiplicand_bits,
                     const AdderEnergyModel& model, bool serialize_alignment)
    : n_(multiplier_bits),
      m_(multiplicand_bits),
      model_(model),
      serialize_alignment_(serialize_alignment) {
    if (n_ < 2 || n_ % 2 != 0) throw SimError("multiplier width must be even and >= 2");
    if (m_ < 2) throw SimError("multiplicand width must be >= 2");
    for (int i = 0; i < n_ / 2; ++i) {
        incr_states_.emplace_back(model_.mtj_writes_fa);
        accum_states_.emplace_back(model_.mtj_writes_fa);
    }
}

std::vector<PartialProduct> BoothUnit::gen_partial_products(
    int64_t multiplicand, const std::vector<BoothBlock>& blocks, Ledger& ledger) {
    if (static_cast<int>(blocks.size()) != n_ / 2)
        throw SimError("block count must equal multiplier_bits / 2");
    if (multiplicand < -(int64_t{1} << (m_ - 1)) || multiplicand >= (int64_t{1} << (m_ - 1)))
        throw SimError("multiplicand does not fit the configured width");

    std::vector<PartialProduct> pps;
    pps.reserve(blocks.size());
    for (size_t t = 0; t < blocks.size(); ++t) {
        const BoothControl c = booth_decode(blocks[t]);
        uint64_t written = 0;
        uint8_t carry = 1; // increment path: +1 enters as the initial carry-in
        for (int cycle = 0; cycle < m_; ++cycle) {
            // ls delays the multiplicand stream one cycle, injecting 0 first
            const uint8_t in = c.ls ? (cycle == 0 ? 0 : bit_of(multiplicand, cycle - 1))
                                    : bit_of(multiplicand, cycle);
            uint8_t out;
            if (c.zero) {
                out = 0;
            } else if (c.comp) {
                const BitPair r = full_add(in ^ 1, 0, carry, incr_states_[t], model_, ledger);
                out = r.sum;
                carry = r.carry;
            } else {
                out = in;
            }
            written |= static_cast<uint64_t>(out) << cycle;
            ledger.energy.add(EnergyEvent::MtjWrite); // partial-product bit into its track
        }
        const int64_t value = static_cast<int64_t>(blocks[t].factor()) * multiplicand;
        assert((written & ((m_ >= 64) ? ~uint64_t{0} : ((uint64_t{1} << m_) - 1))) ==
               (static_cast<uint64_t>(value) & ((m_ >= 64) ? ~uint64_t{0} : ((uint64_t{1} << m_) - 1))));
        pps.push_back({value, static_cast<int>(2 * t), c.zero});
    }
    ledger.latency.add_cycles(Pipeline::BoothGen, static_cast<uint64_t>(m_));
    return pps;
}

int64_t BoothUnit::align_accumulate(const std::vector<PartialProduct>& pps, Ledger& ledger) {
    const int k = static_cast<int>(pps.size());
    if (k == 0) return 0;
    const int stream_len = product_bits();

    // Alignment stage: each track returns from its generation end position to
    // -align so the zero padding sits under the read port first.
    int max_align_walk = 0;
    for (const auto& pp : pps) {
        const int walk = m_ + pp.align;
        ledger.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(walk));
        if (walk > max_align_walk) max_align_walk = walk;
    }
    ledger.latency.add_cycles(Pipeline::BoothAlign, static_cast<uint64_t>(max_align_walk),
                              /*hidden=*/!serialize_alignment_);

    // Addition stage: tracks stream through the serial-adder chain; each
    // track's shifting disables once its stored MSB is under the port so the
    // sign bit repeats for the remaining cycles.
    for (const auto& pp : pps) {
        ledger.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(pp.align + m_));
        ledger.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(stream_len));
    }

    std::vector<uint8_t> carries(accum_states_.size(), 0);
    uint64_t out_bits = 0;
    for (int cycle = 0; cycle < stream_len; ++cycle) {
        auto track_bit = [&](int t) -> uint8_t {
            if (cycle < pps[static_cast<size_t>(t)].align) return 0; // zero padding
            return bit_of(pps[static_cast<size_t>(t)].value,
                          cycle - pps[static_cast<size_t>(t)].align);
        };
        uint8_t running = track_bit(0);
        for (int t = 1; t < k; ++t) {
            const BitPair r = full_add(running, track_bit(t), carries[static_cast<size_t>(t - 1)],
                                       accum_states_[static_cast<size_t>(t - 1)], model_, ledger);
            running = r.sum;
            carries[static_cast<size_t>(t - 1)] = r.carry;
        }
        // final accumulation stage (the mat adder receiving the stream)
        const size_t fin = accum_states_.size() - 1;
        const BitPair r = full_add(running, 0, carries[fin], accum_states_[fin], model_, ledger);
        carries[fin] = r.carry;
        out_bits |= static_cast<uint64_t>(r.sum) << cycle;
    }
    ledger.latency.add_cycles(Pipeline::BoothAccum, static_cast<uint64_t>(stream_len));
    return sign_extend(out_bits, stream_len);
}

int64_t BoothUnit::multiply(int64_t multiplicand, int64_t multiplier, Ledger& ledger) {
    if (multiplier < -(int64_t{1} << (n_ - 1)) || multiplier >= (int64_t{1} << (n_ - 1)))
        throw SimError("multiplier does not fit the configured width");
    const auto blocks = booth_recode(multiplier, n_);
    const auto pps = gen_partial_products(multiplicand, blocks, ledger);
    const int64_t product = align_accumulate(pps, ledger);
    assert(product == multiplicand * multiplier);
    return product;
}

uint64_t BoothUnit::mac_latency_cycles(int n, bool serialize_alignment) {
    uint64_t cycles = static_cast<uint64_t>(n) + 2 * static_cast<uint64_t>(n) +
                      2 * static_cast<uint64_t>(n);
    if (serialize_alignment) cycles += static_cast<uint64_t>(2 * n - 2);
    return cycles;
}

} // namespace rtsim
