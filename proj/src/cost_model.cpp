#include "rtsim/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "rtsim/errors.hpp"

namespace rtsim {

double CostParams::area_mm2(int banks) const {
    if (banks <= 1) return area_single_bank_mm2;
    if (banks == 16) return area_sixteen_bank_mm2;
    // interpolate on the per-bank marginal cost between the two anchors
    const double per_bank = (area_sixteen_bank_mm2 - area_single_bank_mm2) / 15.0;
    return area_single_bank_mm2 + per_bank * (banks - 1);
}

void CostParams::validate() const {
    if (dram_pj_per_bit < 0) throw ConfigError("dram energy must be nonnegative");
    if (area_single_bank_mm2 <= 0 || area_sixteen_bank_mm2 <= 0)
        throw ConfigError("areas must be strictly positive");
}

EnergyCosts make_energy_costs(const DeviceParams& dev, const AdderEnergyModel& adder,
                              const CostParams& cost) {
    EnergyCosts c;
    c[EnergyEvent::MtjWrite] = dev.write_energy_pj;
    c[EnergyEvent::RtShift] = dev.shift_energy_pj;
    c[EnergyEvent::RtRead] = dev.read_energy_pj;
    c[EnergyEvent::FaLogic] = adder.logic_energy_fa_fj / 1000.0;
    c[EnergyEvent::HaLogic] = adder.logic_energy_ha_fj / 1000.0;
    c[EnergyEvent::ShiftControl] = adder.shift_control_energy_fj / 1000.0;
    c[EnergyEvent::DramBit] = cost.dram_pj_per_bit;
    return c;
}

uint64_t ModelSummary::conv_param_bytes() const {
    uint64_t t = 0;
    for (const auto& l : layers)
        if (!l.is_fc) t += l.param_bytes;
    return t;
}

uint64_t ModelSummary::fc_param_bytes() const {
    uint64_t t = 0;
    for (const auto& l : layers)
        if (l.is_fc) t += l.param_bytes;
    return t;
}

DramTraffic dram_accesses_per_frame(const ModelSummary& model, const CostParams& cost, int B) {
    if (B < 1) throw ConfigError("batch size must be >= 1");
    DramTraffic t;
    // Convolution parameters stay resident once loaded; fully-connected
    // parameters stream once per batch. Either way the per-frame share is
    // the total divided by the batch.
    uint64_t params = 0;
    for (const auto& l : model.layers) params += l.param_bytes;
    t.param_bytes_per_frame = static_cast<double>(params) / B;

    double spill = 0;
    const double cap = static_cast<double>(cost.dram_activation_capacity_bytes);
    for (const auto& l : model.layers) {
        const double need = static_cast<double>(l.out_activation_bytes) * B;
        if (need > cap) spill += (need - cap) * 2.0; // written out, read back
    }
    t.activation_bytes_per_frame = static_cast<double>(model.input_bytes) + spill / B;
    return t;
}

ModelSummary vgg16_summary(int weight_bits, int act_bits) {
    struct Conv {
        const char* name;
        int in_c, out_c, dim;
    };
    static const Conv convs[] = {
        {"conv1_1", 3, 64, 224},   {"conv1_2", 64, 64, 224},
        {"conv2_1", 64, 128, 112}, {"conv2_2", 128, 128, 112},
        {"conv3_1", 128, 256, 56}, {"conv3_2", 256, 256, 56}, {"conv3_3", 256, 256, 56},
        {"conv4_1", 256, 512, 28}, {"conv4_2", 512, 512, 28}, {"conv4_3", 512, 512, 28},
        {"conv5_1", 512, 512, 14}, {"conv5_2", 512, 512, 14}, {"conv5_3", 512, 512, 14},
    };
    struct Fc {
        const char* name;
        int in, out;
    };
    static const Fc fcs[] = {{"fc6", 25088, 4096}, {"fc7", 4096, 4096}, {"fc8", 4096, 1000}};

    ModelSummary m;
    m.name = "vgg16";
    m.input_bytes = static_cast<uint64_t>(3) * 224 * 224 * act_bits / 8;
    int pool_after[] = {0, 1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1}; // pool follows these convs
    int idx = 0;
    for (const auto& cv : convs) {
        LayerSummary l;
        l.name = cv.name;
        const uint64_t params =
            static_cast<uint64_t>(cv.in_c) * cv.out_c * 9 + static_cast<uint64_t>(cv.out_c);
        l.param_bytes = params * static_cast<uint64_t>(weight_bits) / 8;
        const uint64_t outs = static_cast<uint64_t>(cv.out_c) * cv.dim * cv.dim;
        l.out_activation_bytes = outs * static_cast<uint64_t>(act_bits) / 8;
        m.total_macs += static_cast<uint64_t>(cv.in_c) * 9 * outs;
        m.layers.push_back(l);
        if (pool_after[idx]) {
            LayerSummary pl;
            pl.name = std::string(cv.name) + "_pool";
            pl.param_bytes = 0;
            pl.out_activation_bytes = static_cast<uint64_t>(cv.out_c) * (cv.dim / 2) *
                                      (cv.dim / 2) * static_cast<uint64_t>(act_bits) / 8;
            m.layers.push_back(pl);
        }
        ++idx;
    }
    for (const auto& fc : fcs) {
        LayerSummary l;
        l.name = fc.name;
        l.is_fc = true;
        const uint64_t params =
            static_cast<uint64_t>(fc.in) * fc.out + static_cast<uint64_t>(fc.out);
        l.param_bytes = params * static_cast<uint64_t>(weight_bits) / 8;
        l.out_activation_bytes = static_cast<uint64_t>(fc.out) * act_bits / 8;
        m.total_macs += static_cast<uint64_t>(fc.in) * fc.out;
        m.layers.push_back(l);
    }
    return m;
}

EfficiencyReport efficiency_report(const EnergyLedger& energy, const LatencyLedger& latency,
                                   const CostParams& cost, double macs, int banks) {
    EfficiencyReport r;
    r.total_energy_pj = energy.total_pj();
    r.wall_ns = latency.wall_ns();
    r.total_cycles = latency.total_cycles();
    r.hidden_cycles = latency.total_hidden_cycles();
    r.macs = macs;
    r.area_mm2 = cost.area_mm2(banks);
    if (r.wall_ns > 0 && macs > 0) {
        r.macs_per_s = macs / (r.wall_ns * 1e-9);
        r.macs_per_s_per_mm2 = r.macs_per_s / r.area_mm2;
    }
    if (macs > 0) r.pj_per_mac = r.total_energy_pj / macs;
    for (int i = 0; i < kEnergyEventCount; ++i) {
        const auto e = static_cast<EnergyEvent>(i);
        EfficiencyReport::Item item;
        item.name = std::string(to_string(e));
        item.count = energy.count(e);
        item.unit_pj = energy.costs()[e];
        item.energy_pj = energy.energy_pj(e);
        item.percent = r.total_energy_pj > 0 ? 100.0 * item.energy_pj / r.total_energy_pj : 0.0;
        r.breakdown.push_back(item);
    }
    return r;
}

std::string EfficiencyReport::to_text() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "energy/inference (pJ)  " << total_energy_pj << "\n";
    os << "wall time (ns)         " << wall_ns << "\n";
    os << "cycles (visible)       " << total_cycles << "\n";
    os << "cycles (hidden)        " << hidden_cycles << "\n";
    os << "MACs                   " << macs << "\n";
    os << "MACs/s                 " << macs_per_s << "\n";
    os << "MACs/s/mm2             " << macs_per_s_per_mm2 << "\n";
    os << "pJ/MAC                 " << pj_per_mac << "\n";
    os << "area (mm2)             " << area_mm2 << "\n";
    os << "breakdown:\n";
    for (const auto& i : breakdown) {
        os << "  " << i.name;
        for (size_t pad = i.name.size(); pad < 15; ++pad) os << ' ';
        os << i.count << " events  " << i.energy_pj << " pJ  " << i.percent << " %\n";
    }
    return os.str();
}

std::string EfficiencyReport::to_json() const {
    nlohmann::json j;
    j["energy_pj"] = total_energy_pj;
    j["wall_ns"] = wall_ns;
    j["cycles"] = total_cycles;
    j["hidden_cycles"] = hidden_cycles;
    j["macs"] = macs;
    j["macs_per_s"] = macs_per_s;
    j["macs_per_s_per_mm2"] = macs_per_s_per_mm2;
    j["pj_per_mac"] = pj_per_mac;
    j["area_mm2"] = area_mm2;
    nlohmann::json items = nlohmann::json::array();
    for (const auto& i : breakdown) {
        items.push_back({{"event", i.name},
                         {"count", i.count},
                         {"unit_pj", i.unit_pj},
                         {"energy_pj", i.energy_pj},
                         {"percent", i.percent}});
    }
    j["breakdown"] = items;
    return j.dump(2);
}

std::string EfficiencyReport::csv_header() {
    return "label,energy_pj,wall_ns,cycles,macs,macs_per_s,macs_per_s_per_mm2,pj_per_mac,"
           "area_mm2,mtj_write_pj,rt_shift_pj,rt_read_pj,fa_logic_pj,ha_logic_pj,"
           "shift_control_pj,dram_pj";
}

std::string EfficiencyReport::csv_row(const std::string& label) const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << label << ',' << total_energy_pj << ',' << wall_ns << ',' << total_cycles << ','
       << macs << ',' << macs_per_s << ',' << macs_per_s_per_mm2 << ',' << pj_per_mac << ','
       << area_mm2;
    for (const auto& i : breakdown) os << ',' << i.energy_pj;
    return os.str();
}

} // namespace rtsim
