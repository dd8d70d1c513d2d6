#include "rtsim/device.hpp"

#include <cmath>
#include <string>

namespace rtsim {

void DeviceParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0))
            throw ConfigError(std::string(name) + " must be strictly positive");
    };
    positive(write_energy_pj, "rt_write_energy_pj");
    positive(shift_energy_pj, "rt_shift_energy_pj");
    positive(write_latency_ns, "rt_write_latency_ns");
    positive(shift_latency_ns, "rt_shift_latency_ns");
    positive(track_width_f, "rt_width_f");
    positive(domain_length_f, "domain_length_f");
    positive(track_length_f, "rt_length_f");
    positive(cmos_width_f, "mu_access_cmos_width_f");
    positive(cmos_length_f, "mu_access_cmos_length_f");
    if (read_energy_pj < 0.0) throw ConfigError("rt_read_energy_pj must be >= 0");
    if (domains_per_track <= 0 || tracks_per_mu <= 0 || ports_per_mu <= 0)
        throw ConfigError("device counts must be strictly positive");
    if (ports_per_mu % tracks_per_mu != 0)
        throw ConfigError("mu_ports must be divisible by rts_per_mu");
    if (domains_per_track % ports_per_track() != 0)
        throw ConfigError("domains_per_rt must be divisible by ports per track");
    if (overhead_multiplier <= 0)
        throw ConfigError("overhead_multiplier must be strictly positive");
}

RacetrackStrip::RacetrackStrip(int domains, std::vector<int> port_positions,
                               int overhead_capacity)
    : data_(static_cast<size_t>(domains), 0),
      ports_(std::move(port_positions)),
      overhead_(overhead_capacity) {
    int prev = -1;
    for (int p : ports_) {
        if (p <= prev || p >= domains)
            throw ConfigError("port positions must be strictly increasing and in range");
        prev = p;
    }
}

void RacetrackStrip::shift(ShiftDir dir) {
    const int next = offset_ + (dir == ShiftDir::Downstream ? 1 : -1);
    if (next > overhead_ || next < -overhead_)
        throw OverheadExceeded("shift would push data past the overhead region (offset " +
                               std::to_string(next) + ", capacity " +
                               std::to_string(overhead_) + ")");
    offset_ = next;
}

uint8_t RacetrackStrip::read(int port) const {
    return data_.at(static_cast<size_t>(aligned_domain(port)));
}

void RacetrackStrip::write(int port, uint8_t bit) {
    data_.at(static_cast<size_t>(aligned_domain(port))) = bit & 1;
}

MacroUnit::MacroUnit(const DeviceParams& params) : params_(params) {
    params_.validate();
    std::vector<int> ports;
    for (int p = 0; p < params_.ports_per_track(); ++p)
        ports.push_back(p * params_.domains_per_port());
    tracks_.reserve(static_cast<size_t>(params_.tracks_per_mu));
    for (int t = 0; t < params_.tracks_per_mu; ++t)
        tracks_.emplace_back(params_.domains_per_track, ports, params_.overhead_capacity());
}

void MacroUnit::raw_shift(ShiftDir dir) {
    for (auto& t : tracks_) t.shift(dir);
    shared_offset_ += (dir == ShiftDir::Downstream ? 1 : -1);
}

void shift_mu(MacroUnit& mu, ShiftDir dir, Ledger& ledger) {
    mu.raw_shift(dir);
    ledger.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(mu.num_tracks()));
    ledger.latency.add_cycles(Pipeline::DeviceAccess, 1);
}

uint8_t access_bit(MacroUnit& mu, int track, int port, AccessMode mode, uint8_t bit,
                   Ledger& ledger) {
    ledger.latency.add_cycles(Pipeline::DeviceAccess, 1);
    if (mode == AccessMode::Write) {
        mu.track(track).write(port, bit);
        ledger.energy.add(EnergyEvent::MtjWrite);
        return bit & 1;
    }
    ledger.energy.add(EnergyEvent::RtRead);
    return mu.track(track).read(port);
}

std::vector<uint32_t> serial_access_word(MacroUnit& mu, int port, int n_bits,
                                         AccessMode mode,
                                         std::span<const uint32_t> words,
                                         Ledger& ledger) {
    if (n_bits > mu.params().domains_per_port())
        throw SimError("serial access longer than the domains sharing a port");
    if (mode == AccessMode::Write && static_cast<int>(words.size()) < mu.num_tracks())
        throw SimError("serial write needs one word per track");

    std::vector<uint32_t> out(static_cast<size_t>(mu.num_tracks()), 0);
    for (int i = 0; i < n_bits; ++i) {
        for (int t = 0; t < mu.num_tracks(); ++t) {
            if (mode == AccessMode::Read) {
                out[static_cast<size_t>(t)] |=
                    static_cast<uint32_t>(mu.track(t).read(port)) << i;
                ledger.energy.add(EnergyEvent::RtRead);
            } else {
                mu.track(t).write(port, static_cast<uint8_t>((words[static_cast<size_t>(t)] >> i) & 1));
                ledger.energy.add(EnergyEvent::MtjWrite);
            }
        }
        mu.raw_shift(ShiftDir::Downstream);
        ledger.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(mu.num_tracks()));
        ledger.latency.add_cycles(Pipeline::DeviceAccess, 1);
    }
    return out;
}

void reset_position(MacroUnit& mu, Ledger& ledger, bool hidden) {
    while (mu.shared_offset() != 0) {
        mu.raw_shift(mu.shared_offset() > 0 ? ShiftDir::Upstream : ShiftDir::Downstream);
        ledger.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(mu.num_tracks()));
        ledger.latency.add_cycles(Pipeline::PositionReset, 1, hidden);
    }
}

} // namespace rtsim
