#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtsim/alu.hpp"
#include "rtsim/device.hpp"
#include "rtsim/ledger.hpp"

namespace rtsim {

struct CostParams {
    double dram_pj_per_bit = 70.0;
    uint64_t dram_weight_capacity_bytes = 16ull * 1024 * 1024;
    uint64_t dram_activation_capacity_bytes = 16ull * 1024 * 1024;
    double area_single_bank_mm2 = 0.92;
    double area_sixteen_bank_mm2 = 14.74;

    double area_mm2(int banks) const;
    void validate() const;
};

EnergyCosts make_energy_costs(const DeviceParams& dev, const AdderEnergyModel& adder,
                              const CostParams& cost);

// Per-layer byte summary for the analytic DRAM model. Activation bytes are
// the activations the layer generates (its outputs); parameter bytes cover
// weights and biases.
struct LayerSummary {
    std::string name;
    uint64_t param_bytes = 0;
    uint64_t out_activation_bytes = 0;
    bool is_fc = false;
};

struct ModelSummary {
    std::string name;
    std::vector<LayerSummary> layers;
    uint64_t input_bytes = 0;
    uint64_t total_macs = 0;

    uint64_t conv_param_bytes() const;
    uint64_t fc_param_bytes() const;
};

struct DramTraffic {
    double param_bytes_per_frame = 0;
    double activation_bytes_per_frame = 0;
    double total_bytes_per_frame() const {
        return param_bytes_per_frame + activation_bytes_per_frame;
    }
    double energy_pj(const CostParams& cost) const {
        return total_bytes_per_frame() * 8.0 * cost.dram_pj_per_bit;
    }
};

// Batching amortizes parameter transfers across B frames; activations
// generated beyond the on-chip activation capacity spill to DRAM and are
// read back for the next layer.
DramTraffic dram_accesses_per_frame(const ModelSummary& model, const CostParams& cost, int B);

// Built-in VGG-16 dimensions for the batching study.
ModelSummary vgg16_summary(int weight_bits, int act_bits);

struct EfficiencyReport {
    double total_energy_pj = 0;
    double wall_ns = 0;
    uint64_t total_cycles = 0;
    uint64_t hidden_cycles = 0;
    double macs = 0;
    double macs_per_s = 0;
    double macs_per_s_per_mm2 = 0;
    double pj_per_mac = 0;
    double area_mm2 = 0;
    struct Item {
        std::string name;
        uint64_t count = 0;
        double unit_pj = 0;
        double energy_pj = 0;
        double percent = 0;
    };
    std::vector<Item> breakdown;

    std::string to_text() const;
    std::string to_json() const;
    static std::string csv_header();
    std::string csv_row(const std::string& label) const;
};

EfficiencyReport efficiency_report(const EnergyLedger& energy, const LatencyLedger& latency,
                                   const CostParams& cost, double macs, int banks);

} // namespace rtsim
