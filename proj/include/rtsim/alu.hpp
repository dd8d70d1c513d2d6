#pragma once

#include <cstdint>
#include <vector>

#include "rtsim/ledger.hpp"

namespace rtsim {

enum class EnergyMode { Baseline, WriteShift };

// Adder circuit characterization. Baseline mode charges one MTJ write per
// input cell; write-shift mode replaces those writes with pre-stored-bit
// shifts, skipped entirely when the required bit already sits under the MTJ.
struct AdderEnergyModel {
    double logic_energy_fa_fj = 19.0;
    double logic_energy_ha_fj = 16.1;
    int mtj_writes_fa = 7;
    int mtj_writes_ha = 4;
    double logic_delay_fa_ps = 240.0;
    double logic_delay_ha_ps = 153.0;
    EnergyMode mode = EnergyMode::WriteShift;
    // Calibrated so a full add with all seven inputs toggling lands on the
    // characterized 0.392 pJ (16/7 fJ per input-MTJ shift).
    double shift_control_energy_fj = 16.0 / 7.0;

    void validate() const; // throws ConfigError
};

// Last bit aligned under each input MTJ of one adder instance; the
// write-shift path only moves cells whose required bit differs.
class InputMtjState {
public:
    explicit InputMtjState(int n_mtjs) : last_(static_cast<size_t>(n_mtjs), 0) {}
    int size() const { return static_cast<int>(last_.size()); }
    uint8_t last(int i) const { return last_[static_cast<size_t>(i)]; }

    // Returns the number of cells actually moved.
    int align(const uint8_t* required, int n);

private:
    std::vector<uint8_t> last_;
};

struct BitPair {
    uint8_t sum;
    uint8_t carry;
};

BitPair full_add(uint8_t a, uint8_t b, uint8_t cin, InputMtjState& state,
                 const AdderEnergyModel& model, Ledger& ledger);

BitPair half_add(uint8_t a, uint8_t b, InputMtjState& state,
                 const AdderEnergyModel& model, Ledger& ledger);

// Bit-serial two's-complement addition over n cycles with the carry threaded
// through a one-bit register. Operands are sign-extended to the n+1-bit
// output width; the carry out of the MSB is discarded. The MSB evaluation
// shares the final cycle (its inputs are already latched), so latency is n
// cycles for n+1 result bits.
int64_t serial_add(int64_t x, int64_t y, int n, InputMtjState& state,
                   const AdderEnergyModel& model, Ledger& ledger,
                   Pipeline pipeline = Pipeline::SerialAdd);

} // namespace rtsim
