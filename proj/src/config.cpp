#include "rtsim/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rtsim {

void SimConfig::validate() const {
    device.validate();
    adder.validate();
    system.validate(device);
    cost.validate();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Field {
    std::function<void(SimConfig&, const std::string&)> set;
    std::function<std::string(const SimConfig&)> get;
};

template <typename T>
T parse_value(const std::string& v);

template <>
double parse_value<double>(const std::string& v) {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw ConfigError("bad numeric value: " + v);
    return d;
}

template <>
int parse_value<int>(const std::string& v) {
    size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw ConfigError("bad integer value: " + v);
    return static_cast<int>(d);
}

template <>
uint64_t parse_value<uint64_t>(const std::string& v) {
    size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw ConfigError("bad integer value: " + v);
    return d;
}

template <typename T, typename Get>
Field num_field(Get getter) {
    return Field{
        [getter](SimConfig& c, const std::string& v) { *getter(c) = parse_value<T>(v); },
        [getter](const SimConfig& c) {
            std::ostringstream os;
            os << *getter(const_cast<SimConfig&>(c));
            return os.str();
        }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> f = {
        // racetrack device
        {"rt_write_energy_pj", num_field<double>(+[](SimConfig& c) { return &c.device.write_energy_pj; })},
        {"rt_shift_energy_pj", num_field<double>(+[](SimConfig& c) { return &c.device.shift_energy_pj; })},
        {"rt_read_energy_pj", num_field<double>(+[](SimConfig& c) { return &c.device.read_energy_pj; })},
        {"rt_write_latency_ns", num_field<double>(+[](SimConfig& c) { return &c.device.write_latency_ns; })},
        {"rt_shift_latency_ns", num_field<double>(+[](SimConfig& c) { return &c.device.shift_latency_ns; })},
        {"domains_per_rt", num_field<int>(+[](SimConfig& c) { return &c.device.domains_per_track; })},
        {"rts_per_mu", num_field<int>(+[](SimConfig& c) { return &c.device.tracks_per_mu; })},
        {"mu_ports", num_field<int>(+[](SimConfig& c) { return &c.device.ports_per_mu; })},
        {"rt_width_f", num_field<double>(+[](SimConfig& c) { return &c.device.track_width_f; })},
        {"domain_length_f", num_field<double>(+[](SimConfig& c) { return &c.device.domain_length_f; })},
        {"rt_length_f", num_field<double>(+[](SimConfig& c) { return &c.device.track_length_f; })},
        {"mu_access_cmos_width_f", num_field<double>(+[](SimConfig& c) { return &c.device.cmos_width_f; })},
        {"mu_access_cmos_length_f", num_field<double>(+[](SimConfig& c) { return &c.device.cmos_length_f; })},
        {"access_cmos_spacing_f", num_field<double>(+[](SimConfig& c) { return &c.device.cmos_spacing_f; })},
        {"overhead_multiplier", num_field<int>(+[](SimConfig& c) { return &c.device.overhead_multiplier; })},
        // adders
        {"fa_logic_energy_fj", num_field<double>(+[](SimConfig& c) { return &c.adder.logic_energy_fa_fj; })},
        {"ha_logic_energy_fj", num_field<double>(+[](SimConfig& c) { return &c.adder.logic_energy_ha_fj; })},
        {"fa_mtj_writes", num_field<int>(+[](SimConfig& c) { return &c.adder.mtj_writes_fa; })},
        {"ha_mtj_writes", num_field<int>(+[](SimConfig& c) { return &c.adder.mtj_writes_ha; })},
        {"fa_logic_delay_ps", num_field<double>(+[](SimConfig& c) { return &c.adder.logic_delay_fa_ps; })},
        {"ha_logic_delay_ps", num_field<double>(+[](SimConfig& c) { return &c.adder.logic_delay_ha_ps; })},
        {"shift_control_energy_fj", num_field<double>(+[](SimConfig& c) { return &c.adder.shift_control_energy_fj; })},
        // organization
        {"bank_capacity_bytes", num_field<uint64_t>(+[](SimConfig& c) { return &c.system.bank_capacity_bytes; })},
        {"mat_groups_per_bank", num_field<int>(+[](SimConfig& c) { return &c.system.mat_groups_per_bank; })},
        {"mats_per_mat_group", num_field<int>(+[](SimConfig& c) { return &c.system.mats_per_group; })},
        {"subarrays_per_mat", num_field<int>(+[](SimConfig& c) { return &c.system.subarrays_per_mat; })},
        {"subarray_rows", num_field<int>(+[](SimConfig& c) { return &c.system.subarray_rows; })},
        {"subarray_cols", num_field<int>(+[](SimConfig& c) { return &c.system.subarray_cols; })},
        {"adders_per_activation_mat", num_field<int>(+[](SimConfig& c) { return &c.system.adders_per_activation_mat; })},
        {"multiplier_blocks_per_mat_group", num_field<int>(+[](SimConfig& c) { return &c.system.multiplier_blocks_per_group; })},
        {"banks", num_field<int>(+[](SimConfig& c) { return &c.system.banks; })},
        {"acc_bits", num_field<int>(+[](SimConfig& c) { return &c.system.acc_bits; })},
        // dram + area
        {"dram_energy_pj_per_bit", num_field<double>(+[](SimConfig& c) { return &c.cost.dram_pj_per_bit; })},
        {"dram_weight_capacity_bytes", num_field<uint64_t>(+[](SimConfig& c) { return &c.cost.dram_weight_capacity_bytes; })},
        {"dram_activation_capacity_bytes", num_field<uint64_t>(+[](SimConfig& c) { return &c.cost.dram_activation_capacity_bytes; })},
        {"area_single_bank_mm2", num_field<double>(+[](SimConfig& c) { return &c.cost.area_single_bank_mm2; })},
        {"area_sixteen_bank_mm2", num_field<double>(+[](SimConfig& c) { return &c.cost.area_sixteen_bank_mm2; })},
    };
    return f;
}

} // namespace

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path.string());
    SimConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "energy_mode") {
            if (value == "baseline")
                cfg.adder.mode = EnergyMode::Baseline;
            else if (value == "write_shift" || value == "write-shift")
                cfg.adder.mode = EnergyMode::WriteShift;
            else
                throw ConfigError("energy_mode must be baseline or write_shift");
            continue;
        }
        const auto it = fields().find(key);
        if (it == fields().end())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" +
                              key + "'");
        it->second.set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

void save_config(const SimConfig& cfg, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open config file for writing: " + path.string());
    os << "energy_mode = "
       << (cfg.adder.mode == EnergyMode::Baseline ? "baseline" : "write_shift") << "\n";
    for (const auto& [key, f] : fields()) os << key << " = " << f.get(cfg) << "\n";
}

} // namespace rtsim
