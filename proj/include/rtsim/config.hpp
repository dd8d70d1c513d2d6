#pragma once

#include <filesystem>

#include "rtsim/alu.hpp"
#include "rtsim/cost_model.hpp"
#include "rtsim/device.hpp"
#include "rtsim/system.hpp"

namespace rtsim {

struct SimConfig {
    DeviceParams device;
    AdderEnergyModel adder;
    SystemConfig system;
    CostParams cost;

    void validate() const;
    EnergyCosts energy_costs() const { return make_energy_costs(device, adder, cost); }
};

// Flat key = value text config mirroring the characterization table names;
// '#' starts a comment, unknown keys are errors.
SimConfig load_config(const std::filesystem::path& path);
void save_config(const SimConfig& cfg, const std::filesystem::path& path);

} // namespace rtsim
