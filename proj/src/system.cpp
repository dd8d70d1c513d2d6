#include "rtsim/system.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <string>

#include "rtsim/reference.hpp"
#include "rtsim/util.hpp"

namespace rtsim {

void SystemConfig::validate(const DeviceParams& d) const {
    if (mat_groups_per_bank <= 0 || mats_per_group <= 0 || subarrays_per_mat <= 0 ||
        subarray_rows <= 0 || subarray_cols <= 0 || banks <= 0)
        throw ConfigError("system counts must be strictly positive");
    if (mats_per_group % 2 != 0)
        throw ConfigError("mats per group must split evenly into activation and weight mats");
    if (acc_bits < 8 || acc_bits > 62) throw ConfigError("accumulator width out of range");
    const uint64_t derived = group_bytes(d) * static_cast<uint64_t>(mat_groups_per_bank);
    if (derived != bank_capacity_bytes)
        throw ConfigError("bank capacity " + std::to_string(bank_capacity_bytes) +
                          " does not match organization-derived " + std::to_string(derived));
}

void LayerShape::validate() const {
    if (C <= 0 || H <= 0 || W <= 0 || F <= 0 || P <= 0 || Q <= 0 || U <= 0)
        throw ConfigError("layer dims must be strictly positive");
    if (P > H || Q > W) throw ConfigError("filter larger than input");
    if ((H - P + U) % U != 0 || (W - Q + U) % U != 0)
        throw ConfigError("output dims must divide exactly: (H-P+U)/U and (W-Q+U)/U");
}

LayerPlacement place_conv_layer(const LayerShape& shape, const SystemConfig& sys,
                                const DeviceParams& dev, int act_bits, int weight_bits,
                                int acc_bits) {
    shape.validate();
    const int G = sys.mat_groups_per_bank;
    const int tracks = dev.tracks_per_mu;
    const int D = shape.out_h();
    const int E = shape.out_w();

    LayerPlacement p;
    p.experimental_stride = shape.U > 1;
    p.channel_group.resize(static_cast<size_t>(shape.C));
    p.channel_mat.resize(static_cast<size_t>(shape.C));
    for (int c = 0; c < shape.C; ++c) {
        p.channel_group[static_cast<size_t>(c)] = c % G;
        p.channel_mat[static_cast<size_t>(c)] = (c / G) % sys.activation_mats_per_group();
    }
    p.active_groups = std::min(shape.C, G);
    p.outputs_per_pass = std::min(tracks, D);

    // Products of input row U*d+p must accumulate on output row d's track;
    // every (d, p) pair landing off the row's native (track, row-group)
    // placement needs a duplicate copy.
    std::set<DuplicateEntry> dups;
    for (int d = 0; d < D; ++d) {
        for (int pp = 0; pp < shape.P; ++pp) {
            const int r = shape.U * d + pp;
            if (r == d) continue; // native placement already aligned
            dups.insert({r, d % tracks, d / tracks});
        }
    }
    p.duplicates.assign(dups.begin(), dups.end());
    p.native_entries_per_column = static_cast<uint64_t>(shape.H);
    p.dup_entries_per_column = dups.size();

    // capacity audit: activations + one live partial sum per output on the
    // activation side, filter slices on the weight side
    const uint64_t act_bits_per_channel =
        (static_cast<uint64_t>(shape.H) + dups.size()) * static_cast<uint64_t>(shape.W) *
        static_cast<uint64_t>(act_bits);
    const uint64_t weight_bits_per_channel = static_cast<uint64_t>(shape.F) * shape.P *
                                             shape.Q * static_cast<uint64_t>(weight_bits);
    const uint64_t partial_bits =
        static_cast<uint64_t>(shape.F) * D * E * static_cast<uint64_t>(acc_bits);

    p.group_activation_bits.assign(static_cast<size_t>(G), 0);
    p.group_weight_bits.assign(static_cast<size_t>(G), 0);
    for (int c = 0; c < shape.C; ++c) {
        p.group_activation_bits[static_cast<size_t>(c % G)] += act_bits_per_channel;
        p.group_weight_bits[static_cast<size_t>(c % G)] += weight_bits_per_channel;
    }
    for (int g = 0; g < p.active_groups; ++g)
        p.group_activation_bits[static_cast<size_t>(g)] += partial_bits;

    const uint64_t act_budget_bits = static_cast<uint64_t>(sys.activation_mats_per_group()) *
                                     sys.mat_bytes(dev) * 8;
    const uint64_t w_budget_bits = static_cast<uint64_t>(sys.weight_mats_per_group()) *
                                   sys.mat_bytes(dev) * 8;
    const uint64_t column_chunk_bits =
        (static_cast<uint64_t>(shape.H) + dups.size()) * static_cast<uint64_t>(act_bits);
    const uint64_t subarray_bits = sys.subarray_bytes(dev) * 8;
    if (column_chunk_bits > subarray_bits)
        throw CapacityExceeded("one activation column exceeds a subarray",
                               (column_chunk_bits - subarray_bits + 7) / 8);
    for (int g = 0; g < G; ++g) {
        if (p.group_activation_bits[static_cast<size_t>(g)] > act_budget_bits)
            throw CapacityExceeded(
                "activation storage exceeds mat group " + std::to_string(g),
                (p.group_activation_bits[static_cast<size_t>(g)] - act_budget_bits + 7) / 8);
        if (p.group_weight_bits[static_cast<size_t>(g)] > w_budget_bits)
            throw CapacityExceeded(
                "weight storage exceeds mat group " + std::to_string(g),
                (p.group_weight_bits[static_cast<size_t>(g)] - w_budget_bits + 7) / 8);
    }

    p.total_activation_bytes = (static_cast<uint64_t>(shape.C) * act_bits_per_channel + 7) / 8;
    p.total_weight_bytes = (static_cast<uint64_t>(shape.C) * weight_bits_per_channel + 7) / 8;
    return p;
}

SimContext::SimContext(const DeviceParams& dev, const AdderEnergyModel& adder,
                       const SystemConfig& sys, const EnergyCosts& costs, Engine engine)
    : dev_(dev), adder_(adder), sys_(sys), engine_(engine),
      ledger_(costs, dev.write_latency_ns) {
    dev_.validate();
    adder_.validate();
    sys_.validate(dev_);
}

BoothUnit& SimContext::booth_unit(int group, int track, int n_w, int n_m) {
    auto& slot = booth_units_[{group, track}];
    if (!slot || slot->multiplier_bits() != n_w || slot->multiplicand_bits() != n_m)
        slot = std::make_unique<BoothUnit>(n_w, n_m, adder_);
    return *slot;
}

ShiftMacUnit& SimContext::shift_unit(int group, int track, const ShiftMacConfig& cfg) {
    auto& slot = shift_units_[{group, track}];
    if (!slot || slot->config().n_b != cfg.n_b || slot->config().d_max != cfg.d_max ||
        slot->config().result_bits != cfg.result_bits)
        slot = std::make_unique<ShiftMacUnit>(cfg, adder_);
    return *slot;
}

InputMtjState& SimContext::adder_state(int group, int idx) {
    auto it = adder_states_.find({group, idx});
    if (it == adder_states_.end())
        it = adder_states_.emplace(std::make_pair(group, idx), InputMtjState(adder_.mtj_writes_fa))
                 .first;
    return it->second;
}

void SimContext::note_subarray_access(int group, int mat, int parity, uint64_t start_cycle) {
    const auto key = std::make_tuple(group, mat, parity);
    auto it = subarray_busy_until_.find(key);
    if (it != subarray_busy_until_.end() && it->second > start_cycle) ++schedule_conflicts;
}

void SimContext::note_subarray_reset(int group, int mat, int parity, uint64_t busy_until) {
    subarray_busy_until_[std::make_tuple(group, mat, parity)] = busy_until;
}

namespace {

// ReLU as sign-bit select, power-of-two rescale, clamp into the activation
// word. Kept local so the simulator path does not share the oracle helper.
int64_t requantize_output(int64_t acc, bool relu, int output_shift, int act_bits) {
    if (relu && (acc < 0)) acc = 0; // MSB=1 selects zero
    acc = floor_shift(acc, -output_shift);
    const int64_t hi = (int64_t{1} << (act_bits - 1)) - 1;
    const int64_t lo = relu ? 0 : -(int64_t{1} << (act_bits - 1));
    if (acc > hi) acc = hi;
    if (acc < lo) acc = lo;
    return acc;
}

struct GroupRun {
    std::vector<int64_t> partial;
    std::vector<uint8_t> has;
    uint64_t cycles = 0;
};

// Accumulate a freshly generated product term into the single live partial
// sum of its output (second mat adder, overlapped with the next pass).
void accumulate_partial(GroupRun& gr, size_t idx, int64_t term, int group, int track,
                        SimContext& ctx) {
    auto& L = ctx.ledger();
    const int acc = ctx.system().acc_bits;
    if (!gr.has[idx]) {
        gr.partial[idx] = term;
        gr.has[idx] = 1;
        L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
        if (ctx.max_live_partials_per_output < 1) ctx.max_live_partials_per_output = 1;
    } else {
        L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(acc));
        L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(acc));
        gr.partial[idx] = serial_add(gr.partial[idx], term, acc,
                                     ctx.adder_state(group, 100 + track), ctx.adder_model(),
                                     L);
        L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
    }
}

int booth_multiplier_width(const ConvLayerSpec& s) {
    int n_w = s.log_weights ? s.d_max + 1 : s.weight_bits;
    if (n_w < 2) n_w = 2;
    if (n_w % 2 != 0) ++n_w;
    return n_w;
}

} // namespace

std::vector<int64_t> run_conv(const std::vector<int64_t>& input, const ConvLayerSpec& spec,
                              const LayerPlacement& placement, SimContext& ctx) {
    const LayerShape& sh = spec.shape;
    sh.validate();
    if (input.size() != static_cast<size_t>(sh.C) * sh.H * sh.W)
        throw SimError("conv input size does not match layer shape");
    if (ctx.engine() == Engine::Shift && !spec.log_weights)
        throw SimError("shift engine requires log-quantized weights");

    const int D = sh.out_h();
    const int E = sh.out_w();
    const int tracks = ctx.device().tracks_per_mu;
    const int n_m = spec.act_bits;
    const int n_w = booth_multiplier_width(spec);
    const int product_bits = n_m + n_w;
    const int acc = ctx.system().acc_bits;
    auto& L = ctx.ledger();

    auto in_at = [&](int c, int r, int col) {
        return input[(static_cast<size_t>(c) * sh.H + r) * sh.W + col];
    };
    auto w_at = [&](int f, int c, int p, int q) {
        return spec.weights[((static_cast<size_t>(f) * sh.C + c) * sh.P + p) * sh.Q + q];
    };

    // duplicate activation copies are written when the layer is staged
    L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(sh.C) *
                                            placement.dup_entries_per_column * sh.W *
                                            static_cast<uint64_t>(spec.act_bits));

    std::map<int, GroupRun> groups;
    for (int c = 0; c < sh.C; ++c) {
        auto& gr = groups[placement.channel_group[static_cast<size_t>(c)]];
        if (gr.partial.empty()) {
            gr.partial.assign(static_cast<size_t>(sh.F) * D * E, 0);
            gr.has.assign(gr.partial.size(), 0);
        }
    }

    const ShiftMacConfig smc{spec.act_bits, spec.d_max, acc, false};
    const uint64_t advance =
        ctx.engine() == Engine::Booth
            ? std::max<uint64_t>(static_cast<uint64_t>(n_m + product_bits),
                                 static_cast<uint64_t>(acc))
            : std::max<uint64_t>(ShiftMacUnit::latency_cycles(smc), static_cast<uint64_t>(acc));

    for (int c = 0; c < sh.C; ++c) {
        const int g = placement.channel_group[static_cast<size_t>(c)];
        const int mat = placement.channel_mat[static_cast<size_t>(c)];
        auto& gr = groups[g];
        for (int f = 0; f < sh.F; ++f) {
            for (int e = 0; e < E; ++e) {
                for (int rg = 0; rg * tracks < D; ++rg) {
                    const int row_lo = rg * tracks;
                    const int row_hi = std::min(row_lo + tracks, D);
                    for (int p = 0; p < sh.P; ++p) {
                        if (ctx.engine() == Engine::Booth) {
                            for (int q = 0; q < sh.Q; ++q) {
                                const int in_col = sh.U * e + q;
                                const int parity = in_col & 1;
                                const uint64_t start = gr.cycles;
                                ctx.note_subarray_access(g, mat, parity, start);
                                // access phase: one word per track, MU shifts coupled
                                L.energy.add(EnergyEvent::RtRead,
                                             static_cast<uint64_t>(n_m) * (row_hi - row_lo));
                                L.energy.add(EnergyEvent::RtShift,
                                             static_cast<uint64_t>(n_m) * tracks);
                                {
                                    LatencyLedger::HiddenScope hs(L.latency);
                                    for (int d = row_lo; d < row_hi; ++d) {
                                        const int track = d % tracks;
                                        const int64_t a = in_at(c, sh.U * d + p, in_col);
                                        auto& unit = ctx.booth_unit(g, track, n_w, n_m);
                                        int64_t term;
                                        if (spec.log_weights) {
                                            const LogCode lc = unpack_log(w_at(f, c, p, q));
                                            if (lc.is_zero) {
                                                unit.multiply(a, 0, L); // zero rows still burn writes
                                                term = 0;
                                            } else {
                                                const int64_t mult =
                                                    int64_t{1} << std::max(lc.exponent, 0);
                                                int64_t prod = unit.multiply(a, mult, L);
                                                if (lc.exponent < 0) {
                                                    prod = floor_shift(prod, lc.exponent);
                                                    L.energy.add(EnergyEvent::RtShift,
                                                                 static_cast<uint64_t>(-lc.exponent));
                                                }
                                                term = lc.sign < 0 ? -prod : prod;
                                            }
                                        } else {
                                            term = unit.multiply(a, w_at(f, c, p, q), L);
                                        }
                                        L.energy.add(EnergyEvent::MtjWrite,
                                                     static_cast<uint64_t>(product_bits));
                                        const size_t idx =
                                            (static_cast<size_t>(f) * D + d) * E + e;
                                        accumulate_partial(gr, idx, term, g, d % tracks, ctx);
                                    }
                                }
                                // position reset hidden behind the alternating access
                                L.energy.add(EnergyEvent::RtShift,
                                             static_cast<uint64_t>(n_m) * tracks);
                                L.latency.add_cycles(Pipeline::PositionReset,
                                                     static_cast<uint64_t>(n_m), true);
                                ctx.note_subarray_reset(g, mat, parity,
                                                        start + 2 * static_cast<uint64_t>(n_m));
                                gr.cycles += advance;
                            }
                        } else {
                            for (int q = 0; q < sh.Q; q += 2) {
                                const bool pair = q + 1 < sh.Q;
                                const uint64_t start = gr.cycles;
                                ctx.note_subarray_access(g, mat, (sh.U * e + q) & 1, start);
                                if (pair)
                                    ctx.note_subarray_access(g, mat, (sh.U * e + q + 1) & 1, start);
                                {
                                    LatencyLedger::HiddenScope hs(L.latency);
                                    for (int d = row_lo; d < row_hi; ++d) {
                                        const int track = d % tracks;
                                        std::vector<ShiftTerm> terms;
                                        for (int dq = 0; dq < (pair ? 2 : 1); ++dq) {
                                            const LogCode lc = unpack_log(w_at(f, c, p, q + dq));
                                            terms.push_back({in_at(c, sh.U * d + p, sh.U * e + q + dq),
                                                             lc.is_zero ? 0 : lc.exponent,
                                                             lc.sign < 0, lc.is_zero});
                                        }
                                        auto& unit = ctx.shift_unit(g, track, smc);
                                        const int64_t sum = unit.run(terms, L);
                                        const size_t idx =
                                            (static_cast<size_t>(f) * D + d) * E + e;
                                        accumulate_partial(gr, idx, sum, g, d % tracks, ctx);
                                    }
                                }
                                for (int dq = 0; dq < (pair ? 2 : 1); ++dq) {
                                    L.energy.add(EnergyEvent::RtShift,
                                                 static_cast<uint64_t>(spec.act_bits) * tracks);
                                    L.latency.add_cycles(Pipeline::PositionReset,
                                                         static_cast<uint64_t>(spec.act_bits),
                                                         true);
                                    ctx.note_subarray_reset(
                                        g, mat, (sh.U * e + q + dq) & 1,
                                        start + 2 * static_cast<uint64_t>(spec.act_bits));
                                }
                                gr.cycles += advance;
                            }
                        }
                    }
                }
            }
        }
    }

    uint64_t wall = 0;
    for (const auto& [g, gr] : groups) wall = std::max(wall, gr.cycles);
    L.latency.add_cycles(Pipeline::Conv, wall);

    // cross-group reduction through the bank adder tree, then bias, ReLU as
    // sign-bit select, power-of-two rescale, output write
    std::vector<int64_t> out(static_cast<size_t>(sh.F) * D * E, 0);
    std::vector<int64_t> vals;
    for (size_t idx = 0; idx < out.size(); ++idx) {
        vals.clear();
        for (const auto& [g, gr] : groups) vals.push_back(gr.partial[idx]);
        int64_t v = vals.size() == 1 ? vals[0] : adder_tree_reduce(vals, ctx);
        if (!spec.bias.empty()) {
            const size_t f = idx / (static_cast<size_t>(D) * E);
            L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(acc));
            L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(acc));
            v = serial_add(v, spec.bias[f], acc, ctx.adder_state(-2, 0), ctx.adder_model(), L);
            L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
        }
        out[idx] = requantize_output(v, spec.relu, spec.output_shift, spec.act_bits);
        L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(spec.act_bits));
    }
    return out;
}

int64_t adder_tree_reduce(std::span<const int64_t> partial_sums, SimContext& ctx) {
    auto& L = ctx.ledger();
    const int acc = ctx.system().acc_bits;
    const size_t n = partial_sums.size();
    if (n == 0) return 0;

    int64_t dest = 0;
    bool have_dest = false;
    size_t i = 0;
    while (i < n) {
        const size_t kp = std::min<size_t>(16, n - i);
        L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(kp) * acc);
        L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(kp) * acc);
        int64_t sum = 0;
        for (size_t j = 0; j < kp; ++j) sum += partial_sums[i + j];
        if (kp > 1) {
            // serial chain across the tree's full adders
            std::vector<uint8_t> carries(kp - 1, 0);
            for (int cycle = 0; cycle < acc; ++cycle) {
                uint8_t running = bit_of(partial_sums[i], cycle);
                for (size_t j = 0; j + 1 < kp; ++j) {
                    const BitPair r =
                        full_add(running, bit_of(partial_sums[i + j + 1], cycle), carries[j],
                                 ctx.adder_state(-1, static_cast<int>(j)), ctx.adder_model(), L);
                    running = r.sum;
                    carries[j] = r.carry;
                }
            }
        }
        L.latency.add_cycles(Pipeline::AdderTree, static_cast<uint64_t>(acc));
        if (!have_dest) {
            dest = sum;
            have_dest = true;
            L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
        } else {
            // next pass accumulates with the partial already in the
            // destination mat
            L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(acc));
            L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(acc));
            dest = serial_add(dest, sum, acc, ctx.adder_state(-1, 20), ctx.adder_model(), L,
                              Pipeline::AdderTree);
            L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
        }
        i += kp;
    }
    return dest;
}

std::vector<int64_t> run_fc(const std::vector<int64_t>& input, const FcLayerSpec& spec,
                            SimContext& ctx) {
    if (static_cast<int>(input.size()) != spec.in) throw SimError("fc input size mismatch");
    if (static_cast<int>(spec.weights.size()) != spec.in * spec.out)
        throw SimError("fc weight size mismatch");
    if (ctx.engine() == Engine::Shift && !spec.log_weights)
        throw SimError("shift engine requires log-quantized weights");

    const int G = ctx.system().mat_groups_per_bank;
    const int tracks = ctx.device().tracks_per_mu;
    const int n_m = spec.act_bits;
    int n_w = spec.log_weights ? spec.d_max + 1 : spec.weight_bits;
    if (n_w < 2) n_w = 2;
    if (n_w % 2 != 0) ++n_w;
    const int product_bits = n_m + n_w;
    const int acc = ctx.system().acc_bits;
    auto& L = ctx.ledger();

    const ShiftMacConfig smc{spec.act_bits, spec.d_max, acc, false};
    const uint64_t advance =
        ctx.engine() == Engine::Booth
            ? std::max<uint64_t>(static_cast<uint64_t>(n_m + product_bits),
                                 static_cast<uint64_t>(acc))
            : std::max<uint64_t>(ShiftMacUnit::latency_cycles(smc), static_cast<uint64_t>(acc));

    std::vector<uint64_t> group_cycles(static_cast<size_t>(G), 0);
    std::vector<int64_t> out(static_cast<size_t>(spec.out), 0);
    for (int nn = 0; nn < spec.out; ++nn) {
        const int g = nn % G;
        int64_t partial = 0;
        bool has = false;
        if (ctx.engine() == Engine::Booth) {
            for (int m = 0; m < spec.in; ++m) {
                // single-racetrack mapping: one read stream, unused-track
                // ALUs switched off; the MU still shifts as a whole
                L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(n_m));
                L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(n_m) * tracks);
                {
                    LatencyLedger::HiddenScope hs(L.latency);
                    auto& unit = ctx.booth_unit(g, 0, n_w, n_m);
                    int64_t term;
                    const int32_t w = spec.weights[static_cast<size_t>(nn) * spec.in + m];
                    if (spec.log_weights) {
                        const LogCode lc = unpack_log(w);
                        if (lc.is_zero) {
                            unit.multiply(input[static_cast<size_t>(m)], 0, L);
                            term = 0;
                        } else {
                            int64_t prod = unit.multiply(input[static_cast<size_t>(m)],
                                                         int64_t{1} << std::max(lc.exponent, 0), L);
                            if (lc.exponent < 0) {
                                prod = floor_shift(prod, lc.exponent);
                                L.energy.add(EnergyEvent::RtShift,
                                             static_cast<uint64_t>(-lc.exponent));
                            }
                            term = lc.sign < 0 ? -prod : prod;
                        }
                    } else {
                        term = unit.multiply(input[static_cast<size_t>(m)], w, L);
                    }
                    L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(product_bits));
                    if (!has) {
                        partial = term;
                        has = true;
                        L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
                    } else {
                        L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(acc));
                        L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(acc));
                        partial = serial_add(partial, term, acc, ctx.adder_state(g, 200),
                                             ctx.adder_model(), L);
                        L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
                    }
                }
                L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(n_m) * tracks);
                L.latency.add_cycles(Pipeline::PositionReset, static_cast<uint64_t>(n_m), true);
                group_cycles[static_cast<size_t>(g)] += advance;
            }
        } else {
            for (int m = 0; m < spec.in; m += 2) {
                const bool pair = m + 1 < spec.in;
                std::vector<ShiftTerm> terms;
                for (int dm = 0; dm < (pair ? 2 : 1); ++dm) {
                    const LogCode lc =
                        unpack_log(spec.weights[static_cast<size_t>(nn) * spec.in + m + dm]);
                    terms.push_back({input[static_cast<size_t>(m + dm)],
                                     lc.is_zero ? 0 : lc.exponent, lc.sign < 0, lc.is_zero});
                }
                {
                    LatencyLedger::HiddenScope hs(L.latency);
                    auto& unit = ctx.shift_unit(g, 0, smc);
                    const int64_t sum = unit.run(terms, L);
                    if (!has) {
                        partial = sum;
                        has = true;
                        L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
                    } else {
                        L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(acc));
                        L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(acc));
                        partial = serial_add(partial, sum, acc, ctx.adder_state(g, 200),
                                             ctx.adder_model(), L);
                        L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
                    }
                }
                L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(spec.act_bits) * tracks);
                L.latency.add_cycles(Pipeline::PositionReset,
                                     static_cast<uint64_t>(spec.act_bits), true);
                group_cycles[static_cast<size_t>(g)] += advance;
            }
        }
        if (!spec.bias.empty()) {
            L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(acc));
            L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(acc));
            {
                LatencyLedger::HiddenScope hs(L.latency);
                partial = serial_add(partial, spec.bias[static_cast<size_t>(nn)], acc,
                                     ctx.adder_state(g, 200), ctx.adder_model(), L);
            }
            L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(acc));
            group_cycles[static_cast<size_t>(g)] += static_cast<uint64_t>(acc);
        }
        out[static_cast<size_t>(nn)] =
            requantize_output(partial, spec.relu, spec.output_shift, spec.act_bits);
        L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(spec.act_bits));
    }

    uint64_t wall = 0;
    for (uint64_t cg : group_cycles) wall = std::max(wall, cg);
    L.latency.add_cycles(Pipeline::FullyConnected, wall);
    return out;
}

std::vector<int64_t> run_batchnorm(const std::vector<int64_t>& input, const BnLayerSpec& spec,
                                   SimContext& ctx) {
    if (input.size() != static_cast<size_t>(spec.C) * spec.H * spec.W)
        throw SimError("batchnorm input size mismatch");
    if (spec.mu.size() != static_cast<size_t>(spec.C) ||
        spec.beta.size() != static_cast<size_t>(spec.C) ||
        spec.scale_num.size() != static_cast<size_t>(spec.C))
        throw SimError("batchnorm needs per-channel mu, beta, scale");

    const int G = ctx.system().mat_groups_per_bank;
    const int tracks = ctx.device().tracks_per_mu;
    const int w1 = spec.act_bits + 1;            // x - mu
    const int n_m = spec.act_bits + 2;           // centered value width
    int n_w = spec.weight_bits;
    if (n_w % 2 != 0) ++n_w;
    const int w2 = spec.act_bits + 2;            // + beta
    auto& L = ctx.ledger();

    const int64_t hi = (int64_t{1} << (spec.act_bits - 1)) - 1;
    const int64_t lo = -(int64_t{1} << (spec.act_bits - 1));

    std::vector<int64_t> out(input.size(), 0);
    std::vector<uint64_t> group_cycles(static_cast<size_t>(G), 0);
    const uint64_t per_act_cycles = static_cast<uint64_t>(w1) +
                                    static_cast<uint64_t>(n_m + n_m + n_w) +
                                    static_cast<uint64_t>(w2);
    for (int c = 0; c < spec.C; ++c) {
        const int g = c % G;
        const int64_t s_num = spec.scale_num[static_cast<size_t>(c)];
        if (s_num < -(int64_t{1} << (n_w - 1)) || s_num >= (int64_t{1} << (n_w - 1)))
            throw SimError("batchnorm scale does not fit the multiplier width");
        for (int i = 0; i < spec.H * spec.W; ++i) {
            const size_t idx = static_cast<size_t>(c) * spec.H * spec.W + static_cast<size_t>(i);
            LatencyLedger::HiddenScope hs(L.latency);
            // fixed-point batch norm is always processed on the Booth path
            const int64_t centered =
                serial_add(input[idx], -spec.mu[static_cast<size_t>(c)], w1,
                           ctx.adder_state(g, 300), ctx.adder_model(), L);
            auto& unit = ctx.booth_unit(g, 300, n_w, n_m);
            int64_t prod = unit.multiply(centered, s_num, L);
            prod = floor_shift(prod, -spec.frac_bits);
            L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(spec.frac_bits));
            int64_t v = serial_add(prod, spec.beta[static_cast<size_t>(c)], w2,
                                   ctx.adder_state(g, 301), ctx.adder_model(), L);
            if (v > hi) v = hi;
            if (v < lo) v = lo;
            out[idx] = v;
            L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(spec.act_bits));
        }
        group_cycles[static_cast<size_t>(g)] +=
            ceil_div(static_cast<uint64_t>(spec.H) * spec.W, static_cast<uint64_t>(tracks)) *
            per_act_cycles;
    }
    uint64_t wall = 0;
    for (uint64_t cg : group_cycles) wall = std::max(wall, cg);
    L.latency.add_cycles(Pipeline::BatchNorm, wall);
    return out;
}

std::vector<int64_t> run_pool(const std::vector<int64_t>& input, PoolLayerSpec& spec,
                              SimContext& ctx) {
    if (input.size() != static_cast<size_t>(spec.C) * spec.H * spec.W)
        throw SimError("pool input size mismatch");
    if (spec.H % spec.window != 0 || spec.W % spec.window != 0)
        throw SimError("pooling window must divide the activation dimensions");

    const int ws = spec.window * spec.window;
    const int shift = nearest_pow2_exponent(static_cast<uint64_t>(ws));
    spec.inexact_divide = (int64_t{1} << shift) != ws;
    const int wad = spec.act_bits + ceil_log2(static_cast<uint64_t>(ws)) + 1;
    const int oh = spec.H / spec.window;
    const int ow = spec.W / spec.window;
    const int tracks = ctx.device().tracks_per_mu;
    auto& L = ctx.ledger();

    std::vector<int64_t> out(static_cast<size_t>(spec.C) * oh * ow, 0);
    uint64_t windows = 0;
    for (int c = 0; c < spec.C; ++c) {
        for (int r = 0; r < oh; ++r) {
            for (int col = 0; col < ow; ++col) {
                LatencyLedger::HiddenScope hs(L.latency);
                int64_t acc = 0;
                int64_t best = 0;
                bool first = true;
                for (int i = 0; i < spec.window; ++i) {
                    for (int j = 0; j < spec.window; ++j) {
                        const int64_t v =
                            input[(static_cast<size_t>(c) * spec.H + r * spec.window + i) *
                                      spec.W +
                                  col * spec.window + j];
                        L.energy.add(EnergyEvent::RtRead, static_cast<uint64_t>(spec.act_bits));
                        L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(spec.act_bits));
                        if (first) {
                            acc = v;
                            best = v;
                            first = false;
                            continue;
                        }
                        if (spec.kind == PoolKind::Avg) {
                            acc = serial_add(acc, v, wad, ctx.adder_state(-3, 0),
                                             ctx.adder_model(), L);
                        } else {
                            // sign of the serial difference selects the max;
                            // reuses the negation path
                            const int64_t diff = serial_add(best, -v, wad,
                                                            ctx.adder_state(-3, 1),
                                                            ctx.adder_model(), L);
                            if (diff < 0) best = v;
                        }
                    }
                }
                int64_t result;
                if (spec.kind == PoolKind::Avg) {
                    result = floor_shift(acc, -shift);
                    L.energy.add(EnergyEvent::RtShift, static_cast<uint64_t>(shift));
                } else {
                    result = best;
                }
                out[(static_cast<size_t>(c) * oh + r) * ow + col] = result;
                L.energy.add(EnergyEvent::MtjWrite, static_cast<uint64_t>(spec.act_bits));
                ++windows;
            }
        }
    }
    const uint64_t per_window = static_cast<uint64_t>(ws - 1) * static_cast<uint64_t>(wad) +
                                static_cast<uint64_t>(shift);
    L.latency.add_cycles(Pipeline::Pool,
                         ceil_div(windows, static_cast<uint64_t>(tracks)) * per_window);
    return out;
}

} // namespace rtsim
