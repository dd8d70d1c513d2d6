#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtsim/errors.hpp"
#include "rtsim/ledger.hpp"

namespace rtsim {

// Racetrack device and macro-unit geometry plus per-primitive costs.
// Defaults follow the characterized single-track and MU parameter tables.
struct DeviceParams {
    double write_energy_pj = 1.0;
    double shift_energy_pj = 0.051;
    double read_energy_pj = 0.0; // sensing cost, negligible next to writes
    double write_latency_ns = 5.0;
    double shift_latency_ns = 0.5;

    int domains_per_track = 64;
    int tracks_per_mu = 4;
    int ports_per_mu = 16;

    // feature-size units
    double track_width_f = 1.0;
    double domain_length_f = 2.0;
    double track_length_f = 128.0;
    double cmos_width_f = 10.0;
    double cmos_length_f = 4.0;
    double cmos_spacing_f = 1.0;

    // Overhead region = domains-per-port-group (domains/ports of an MU)
    // times this multiplier; default sized for the largest scheduled
    // access (16-bit words).
    int overhead_multiplier = 4;

    int ports_per_track() const { return ports_per_mu / tracks_per_mu; }
    int domains_per_port() const { return domains_per_track / ports_per_track(); }
    int overhead_capacity() const {
        return (domains_per_track / ports_per_mu) * overhead_multiplier;
    }
    uint64_t mu_bytes() const {
        return static_cast<uint64_t>(domains_per_track) * tracks_per_mu / 8;
    }

    void validate() const; // throws ConfigError
};

enum class ShiftDir { Downstream, Upstream }; // downstream increments offset
enum class AccessMode { Read, Write };

// One nanowire strip: an immutable-under-shift bit array plus a signed
// displacement from the home position. Overhead domains at both ends absorb
// shifted-out data; pushing past them is a hard error, not silent loss.
class RacetrackStrip {
public:
    RacetrackStrip(int domains, std::vector<int> port_positions, int overhead_capacity);

    int offset() const { return offset_; }
    int overhead_capacity() const { return overhead_; }
    int num_domains() const { return static_cast<int>(data_.size()); }
    int num_ports() const { return static_cast<int>(ports_.size()); }
    int port_position(int port) const { return ports_.at(port); }

    void shift(ShiftDir dir); // raw, no ledger; throws OverheadExceeded

    // Domain currently aligned under `port` given the offset.
    int aligned_domain(int port) const { return ports_.at(port) + offset_; }
    uint8_t read(int port) const;
    void write(int port, uint8_t bit);

    // Home-indexed access for loading/inspecting contents.
    uint8_t domain(int i) const { return data_.at(i); }
    void set_domain(int i, uint8_t bit) { data_.at(i) = bit & 1; }

private:
    std::vector<uint8_t> data_;
    std::vector<int> ports_;
    int offset_ = 0;
    int overhead_;
};

// Interleaved strips sharing access transistors and shift drivers. All
// tracks of one MU shift together, so their offsets are always identical.
class MacroUnit {
public:
    explicit MacroUnit(const DeviceParams& params);

    int shared_offset() const { return shared_offset_; }
    int num_tracks() const { return static_cast<int>(tracks_.size()); }
    const DeviceParams& params() const { return params_; }

    RacetrackStrip& track(int i) { return tracks_.at(i); }
    const RacetrackStrip& track(int i) const { return tracks_.at(i); }

    void raw_shift(ShiftDir dir); // all tracks together, no ledger

private:
    DeviceParams params_;
    std::vector<RacetrackStrip> tracks_;
    int shared_offset_ = 0;
};

// Shift all tracks of the MU one position; records one shift event per
// track and one shift tick.
void shift_mu(MacroUnit& mu, ShiftDir dir, Ledger& ledger);

// Read or write the bit aligned under (track, port). One read/write event.
uint8_t access_bit(MacroUnit& mu, int track, int port, AccessMode mode, uint8_t bit,
                   Ledger& ledger);

// Access phase: n_bits interleaved access+shift cycles, LSB first, one word
// per track. Leaves the MU at offset +n_bits; the caller schedules the
// position reset.
std::vector<uint32_t> serial_access_word(MacroUnit& mu, int port, int n_bits,
                                         AccessMode mode,
                                         std::span<const uint32_t> words,
                                         Ledger& ledger);

// Position-reset phase: shift back to home, one cycle per step.
void reset_position(MacroUnit& mu, Ledger& ledger, bool hidden = false);

} // namespace rtsim
