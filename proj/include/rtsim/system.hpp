#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "rtsim/booth.hpp"
#include "rtsim/device.hpp"
#include "rtsim/ledger.hpp"
#include "rtsim/quantizer.hpp"
#include "rtsim/reference.hpp"
#include "rtsim/shift_mac.hpp"

namespace rtsim {

enum class Engine { Booth, Shift };

// Bank organization. Capacities derive from the counts: 16 groups x 16 mats
// x 4 subarrays x (16x4 MUs x 32 B) multiplies out to the 2 MB bank.
struct SystemConfig {
    uint64_t bank_capacity_bytes = 2 * 1024 * 1024;
    int mat_groups_per_bank = 16;
    int mats_per_group = 16; // half activation mats, half weight mats
    int subarrays_per_mat = 4;
    int subarray_rows = 16;
    int subarray_cols = 4;
    int adders_per_activation_mat = 2;
    int multiplier_blocks_per_group = 2;
    int banks = 1;
    int acc_bits = 32; // partial-sum width, two's complement

    int activation_mats_per_group() const { return mats_per_group / 2; }
    int weight_mats_per_group() const { return mats_per_group / 2; }
    uint64_t subarray_bytes(const DeviceParams& d) const {
        return static_cast<uint64_t>(subarray_rows) * subarray_cols * d.mu_bytes();
    }
    uint64_t mat_bytes(const DeviceParams& d) const {
        return subarray_bytes(d) * static_cast<uint64_t>(subarrays_per_mat);
    }
    uint64_t group_bytes(const DeviceParams& d) const {
        return mat_bytes(d) * static_cast<uint64_t>(mats_per_group);
    }

    void validate(const DeviceParams& d) const;
};

struct LayerShape {
    int C, H, W; // input channels / height / width
    int F, P, Q; // filters / filter height / width
    int U = 1;   // stride

    int out_h() const { return (H - P + U) / U; }
    int out_w() const { return (W - Q + U) / U; }
    void validate() const; // dims positive, output dims exactly integral
};

// A duplicate activation: input row `row` re-stored at `track` for the pass
// window of output row-group `row_group` (same pattern in every column).
struct DuplicateEntry {
    int row;
    int track;
    int row_group;
    auto operator<=>(const DuplicateEntry&) const = default;
};

struct LayerPlacement {
    std::vector<int> channel_group; // channel -> mat group
    std::vector<int> channel_mat;   // channel -> activation/weight mat within group
    std::vector<DuplicateEntry> duplicates; // per column of one channel
    int outputs_per_pass = 0;
    int active_groups = 0;
    bool experimental_stride = false; // crossing rule applied with U > 1
    uint64_t native_entries_per_column = 0;
    uint64_t dup_entries_per_column = 0;
    std::vector<uint64_t> group_activation_bits; // audit, per group
    std::vector<uint64_t> group_weight_bits;
    uint64_t total_activation_bytes = 0;
    uint64_t total_weight_bytes = 0;
};

// Even input columns land in parity-0 subarrays, odd columns in parity-1;
// consecutive rows of one column share an MU across its four tracks, with
// duplicates inserted for rows whose products must accumulate on a
// different track. Throws CapacityExceeded (with the shortfall) when a
// group's activation or weight budget is blown.
LayerPlacement place_conv_layer(const LayerShape& shape, const SystemConfig& sys,
                                const DeviceParams& dev, int act_bits, int weight_bits,
                                int acc_bits);

struct SimConfig;

// Execution context: configuration, the ledger, persistent arithmetic unit
// state per mat group, and schedule audit counters.
class SimContext {
public:
    SimContext(const DeviceParams& dev, const AdderEnergyModel& adder,
               const SystemConfig& sys, const EnergyCosts& costs, Engine engine);

    Ledger& ledger() { return ledger_; }
    const DeviceParams& device() const { return dev_; }
    const AdderEnergyModel& adder_model() const { return adder_; }
    const SystemConfig& system() const { return sys_; }
    Engine engine() const { return engine_; }
    void set_engine(Engine e) { engine_ = e; }

    BoothUnit& booth_unit(int group, int track, int n_w, int n_m);
    ShiftMacUnit& shift_unit(int group, int track, const ShiftMacConfig& cfg);
    InputMtjState& adder_state(int group, int idx);

    // schedule audit
    uint64_t schedule_conflicts = 0;
    int max_live_partials_per_output = 0;
    void note_subarray_access(int group, int mat, int parity, uint64_t start_cycle);
    void note_subarray_reset(int group, int mat, int parity, uint64_t busy_until);

private:
    DeviceParams dev_;
    AdderEnergyModel adder_;
    SystemConfig sys_;
    Engine engine_;
    Ledger ledger_;
    std::map<std::pair<int, int>, std::unique_ptr<BoothUnit>> booth_units_;
    std::map<std::pair<int, int>, std::unique_ptr<ShiftMacUnit>> shift_units_;
    std::map<std::pair<int, int>, InputMtjState> adder_states_;
    std::map<std::tuple<int, int, int>, uint64_t> subarray_busy_until_;
};

// Integer weight view: linear weights as signed codes, log weights as packed
// codes with per-term floor semantics.
struct ConvLayerSpec {
    LayerShape shape;
    std::vector<int32_t> weights; // [F][C][P][Q]
    std::vector<int64_t> bias;    // [F]
    bool log_weights = false;
    int weight_bits = 8;
    int d_max = 8; // log engine shift range
    int act_bits = 8;
    int output_shift = 0;
    bool relu = true;
};

struct FcLayerSpec {
    int in = 0, out = 0;
    std::vector<int32_t> weights; // [out][in]
    std::vector<int64_t> bias;
    bool log_weights = false;
    int weight_bits = 8;
    int d_max = 8;
    int act_bits = 8;
    int output_shift = 0;
    bool relu = true;
};

struct BnLayerSpec {
    int C = 0, H = 0, W = 0;
    std::vector<int64_t> mu;        // activation-grid codes
    std::vector<int64_t> beta;      // activation-grid codes
    std::vector<int64_t> scale_num; // gamma/sqrt(Var) in Q(frac_bits)
    int frac_bits = 7;
    int weight_bits = 8;
    int act_bits = 8;
};

struct PoolLayerSpec {
    int C = 0, H = 0, W = 0;
    int window = 2;
    PoolKind kind = PoolKind::Avg;
    int act_bits = 8;
    bool inexact_divide = false; // set by run_pool for non-power-of-two windows
};

std::vector<int64_t> run_conv(const std::vector<int64_t>& input, const ConvLayerSpec& spec,
                              const LayerPlacement& placement, SimContext& ctx);

// 4-level bit-serial tree over at most 16 partial sums per pass; more inputs
// take extra passes accumulated in the destination mat.
int64_t adder_tree_reduce(std::span<const int64_t> partial_sums, SimContext& ctx);

std::vector<int64_t> run_fc(const std::vector<int64_t>& input, const FcLayerSpec& spec,
                            SimContext& ctx);

// out = gamma/sqrt(Var) * (x - mu) + beta: one subtract, one Booth multiply,
// one add per activation. Always routed through the Booth engine.
std::vector<int64_t> run_batchnorm(const std::vector<int64_t>& input, const BnLayerSpec& spec,
                                   SimContext& ctx);

std::vector<int64_t> run_pool(const std::vector<int64_t>& input, PoolLayerSpec& spec,
                              SimContext& ctx);

} // namespace rtsim
