#include "rtsim/alu.hpp"

#include "rtsim/errors.hpp"
#include "rtsim/util.hpp"

namespace rtsim {

void AdderEnergyModel::validate() const {
    if (logic_energy_fa_fj < 0 || logic_energy_ha_fj < 0 || shift_control_energy_fj < 0)
        throw ConfigError("adder energies must be nonnegative");
    if (mtj_writes_fa != 7 || mtj_writes_ha != 4)
        throw ConfigError("adder MTJ counts are fixed by the circuit (FA:7, HA:4)");
    if (logic_delay_fa_ps <= 0 || logic_delay_ha_ps <= 0)
        throw ConfigError("adder delays must be strictly positive");
}

int InputMtjState::align(const uint8_t* required, int n) {
    int moved = 0;
    for (int i = 0; i < n; ++i) {
        const uint8_t want = required[i] & 1;
        if (last_[static_cast<size_t>(i)] != want) {
            last_[static_cast<size_t>(i)] = want;
            ++moved;
        }
    }
    return moved;
}

namespace {

void charge_inputs(const uint8_t* required, int n, InputMtjState& state,
                   const AdderEnergyModel& model, Ledger& ledger) {
    if (model.mode == EnergyMode::Baseline) {
        state.align(required, n); // keep state coherent even when not billed
        ledger.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(n));
    } else {
        const int moved = state.align(required, n);
        if (moved > 0) {
            ledger.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(moved));
            ledger.energy.add(EnergyEvent::ShiftControl, static_cast<uint64_t>(moved));
        }
    }
}

} // namespace

BitPair full_add(uint8_t a, uint8_t b, uint8_t cin, InputMtjState& state,
                 const AdderEnergyModel& model, Ledger& ledger) {
    a &= 1;
    b &= 1;
    cin &= 1;
    // Seven input cells: the three operands, their complements, and the
    // duplicate of A feeding the carry-out stage.
    const uint8_t req[7] = {a, b, cin,
                            static_cast<uint8_t>(a ^ 1), static_cast<uint8_t>(b ^ 1),
                            static_cast<uint8_t>(cin ^ 1), a};
    charge_inputs(req, 7, state, model, ledger);
    ledger.energy.add(EnergyEvent::FaLogic);
    return {static_cast<uint8_t>(a ^ b ^ cin),
            static_cast<uint8_t>((a & b) | (a & cin) | (b & cin))};
}

BitPair half_add(uint8_t a, uint8_t b, InputMtjState& state,
                 const AdderEnergyModel& model, Ledger& ledger) {
    a &= 1;
    b &= 1;
    const uint8_t req[4] = {a, b, static_cast<uint8_t>(a ^ 1), static_cast<uint8_t>(b ^ 1)};
    charge_inputs(req, 4, state, model, ledger);
    ledger.energy.add(EnergyEvent::HaLogic);
    return {static_cast<uint8_t>(a ^ b), static_cast<uint8_t>(a & b)};
}

int64_t serial_add(int64_t x, int64_t y, int n, InputMtjState& state,
                   const AdderEnergyModel& model, Ledger& ledger, Pipeline pipeline) {
    uint64_t result = 0;
    uint8_t carry = 0;
    for (int i = 0; i <= n; ++i) {
        const BitPair r = full_add(bit_of(x, i), bit_of(y, i), carry, state, model, ledger);
        result |= static_cast<uint64_t>(r.sum) << i;
        carry = r.carry;
    }
    ledger.latency.add_cycles(pipeline, static_cast<uint64_t>(n));
    return sign_extend(result, n + 1);
}

} // namespace rtsim
