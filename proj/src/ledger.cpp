#include "rtsim/ledger.hpp"

#include <cassert>

namespace rtsim {

std::string_view to_string(EnergyEvent e) {
    switch (e) {
        case EnergyEvent::MtjWrite: return "mtj_write";
        case EnergyEvent::RtShift: return "rt_shift";
        case EnergyEvent::RtRead: return "rt_read";
        case EnergyEvent::FaLogic: return "fa_logic";
        case EnergyEvent::HaLogic: return "ha_logic";
        case EnergyEvent::ShiftControl: return "shift_control";
        case EnergyEvent::DramBit: return "dram_bit";
    }
    return "?";
}

std::string_view to_string(Pipeline p) {
    switch (p) {
        case Pipeline::DeviceAccess: return "device_access";
        case Pipeline::PositionReset: return "position_reset";
        case Pipeline::SerialAdd: return "serial_add";
        case Pipeline::BoothGen: return "booth_gen";
        case Pipeline::BoothAlign: return "booth_align";
        case Pipeline::BoothAccum: return "booth_accum";
        case Pipeline::ShiftMac: return "shift_mac";
        case Pipeline::AdderTree: return "adder_tree";
        case Pipeline::Conv: return "conv";
        case Pipeline::FullyConnected: return "fully_connected";
        case Pipeline::BatchNorm: return "batch_norm";
        case Pipeline::Pool: return "pool";
    }
    return "?";
}

uint64_t EnergyLedger::total_events() const {
    uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

double EnergyLedger::total_pj() const {
    double t = 0.0;
    for (int i = 0; i < kEnergyEventCount; ++i)
        t += static_cast<double>(counts_[i]) * costs_.pj[i];
    return t;
}

void EnergyLedger::merge(const EnergyLedger& other) {
    for (int i = 0; i < kEnergyEventCount; ++i) counts_[i] += other.counts_[i];
}

uint64_t LatencyLedger::total_cycles() const {
    uint64_t t = 0;
    for (auto c : cycles_) t += c;
    return t;
}

uint64_t LatencyLedger::total_hidden_cycles() const {
    uint64_t t = 0;
    for (auto c : hidden_) t += c;
    return t;
}

void LatencyLedger::merge(const LatencyLedger& other) {
    for (int i = 0; i < kPipelineCount; ++i) {
        cycles_[i] += other.cycles_[i];
        hidden_[i] += other.hidden_[i];
    }
}

LatencyLedger::HiddenScope::HiddenScope(LatencyLedger& l) : ledger_(l), snapshot_(l.cycles_) {}

LatencyLedger::HiddenScope::~HiddenScope() {
    for (int i = 0; i < kPipelineCount; ++i) {
        const uint64_t delta = ledger_.cycles_[i] - snapshot_[i];
        ledger_.cycles_[i] = snapshot_[i];
        ledger_.hidden_[i] += delta;
    }
}

} // namespace rtsim
