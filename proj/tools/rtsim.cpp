#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtsim/booth.hpp"
#include "rtsim/config.hpp"
#include "rtsim/cost_model.hpp"
#include "rtsim/model.hpp"
#include "rtsim/quantizer.hpp"
#include "rtsim/shift_mac.hpp"
#include "rtsim/system.hpp"

namespace fs = std::filesystem;
using namespace rtsim;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string engine = "booth";
    std::string energy_mode;
    std::string out_dir = "out";
    uint64_t seed = 1;
};

SimConfig resolve_config(const CommonOpts& o) {
    SimConfig cfg = o.config_path.empty() ? SimConfig{} : load_config(o.config_path);
    if (!o.energy_mode.empty()) {
        if (o.energy_mode == "baseline")
            cfg.adder.mode = EnergyMode::Baseline;
        else if (o.energy_mode == "write-shift" || o.energy_mode == "write_shift")
            cfg.adder.mode = EnergyMode::WriteShift;
        else
            throw ConfigError("energy mode must be baseline or write-shift");
    }
    cfg.validate();
    return cfg;
}

Engine resolve_engine(const std::string& s) {
    if (s == "booth") return Engine::Booth;
    if (s == "shift") return Engine::Shift;
    throw ConfigError("engine must be booth or shift");
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p);
    if (!os) throw IoError("cannot write " + p.string());
    os << content;
}

void write_events_csv(const fs::path& p, const Ledger& ledger) {
    std::ostringstream os;
    os << "kind,name,count,unit_pj,energy_pj\n";
    os.setf(std::ios::fixed);
    os.precision(9);
    for (int i = 0; i < kEnergyEventCount; ++i) {
        const auto e = static_cast<EnergyEvent>(i);
        os << "energy," << to_string(e) << ',' << ledger.energy.count(e) << ','
           << ledger.energy.costs()[e] << ',' << ledger.energy.energy_pj(e) << "\n";
    }
    for (int i = 0; i < kPipelineCount; ++i) {
        const auto pl = static_cast<Pipeline>(i);
        os << "cycles," << to_string(pl) << ',' << ledger.latency.cycles(pl) << ",,\n";
        os << "hidden_cycles," << to_string(pl) << ',' << ledger.latency.hidden_cycles(pl)
           << ",,\n";
    }
    write_file(p, os.str());
}

QuantizedTensor logits_tensor(const std::vector<int64_t>& logits, int act_bits) {
    QuantizedTensor t;
    t.shape = {static_cast<int>(logits.size())};
    t.spec = {0.0, 1.0, act_bits, QuantScheme::Linear, 8};
    t.payload.assign(logits.begin(), logits.end());
    return t;
}

int cmd_simulate(const CommonOpts& common, const std::string& model_path,
                 const std::string& input_path, bool verify, int batch, int bits, int dmax) {
    const SimConfig cfg = resolve_config(common);
    const Model model = load_model(model_path, common.seed, bits, dmax);

    std::vector<int64_t> input;
    if (!input_path.empty()) {
        const QuantizedTensor t = load_tensor(input_path);
        if (t.element_count() != static_cast<size_t>(model.in_c) * model.in_h * model.in_w)
            throw ConfigError("input tensor does not match the model input shape");
        input.assign(t.payload.begin(), t.payload.end());
    } else {
        input = random_activations(model.in_c * model.in_h * model.in_w, model.act_bits,
                                   common.seed ^ 0x9e3779b97f4a7c15ull);
    }

    SimContext ctx(cfg.device, cfg.adder, cfg.system, cfg.energy_costs(),
                   resolve_engine(common.engine));
    const InferenceResult result = run_inference(model, input, ctx, verify);

    // per-frame DRAM traffic at the requested batch size enters the ledger
    const auto traffic = dram_accesses_per_frame(summarize_model(model), cfg.cost, batch);
    ctx.ledger().energy.add(EnergyEvent::DramBit,
                            static_cast<uint64_t>(traffic.total_bytes_per_frame() * 8.0));

    fs::create_directories(common.out_dir);
    save_tensor(logits_tensor(result.logits, model.act_bits),
                fs::path(common.out_dir) / "outputs.json");
    const auto report = efficiency_report(ctx.ledger().energy, ctx.ledger().latency, cfg.cost,
                                          static_cast<double>(result.macs), cfg.system.banks);
    write_file(fs::path(common.out_dir) / "report.json", report.to_json() + "\n");
    write_file(fs::path(common.out_dir) / "report.txt", report.to_text());
    write_events_csv(fs::path(common.out_dir) / "events.csv", ctx.ledger());

    std::cout << "model " << model.name << ": " << result.macs << " MACs, "
              << report.total_energy_pj << " pJ, " << report.wall_ns << " ns"
              << (verify ? ", oracle check passed" : "") << "\n";
    return 0;
}

std::vector<double> read_float_json(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw IoError("cannot open tensor file: " + p.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad JSON " + p.string() + ": " + e.what());
    }
    std::vector<double> flat;
    std::function<void(const nlohmann::json&)> walk = [&](const nlohmann::json& node) {
        if (node.is_array())
            for (const auto& c : node) walk(c);
        else
            flat.push_back(node.get<double>());
    };
    walk(j);
    return flat;
}

int cmd_quantize(const std::string& in_path, const std::string& out_path,
                 const std::string& scheme, int bits, int dmax, double x_max,
                 const std::string& kind, bool sweep_xmax) {
    const std::vector<double> values = read_float_json(in_path);
    if (sweep_xmax) {
        std::cout << "x_max,mean_sq_error,max_abs_error\n";
        for (const auto& pt : weight_xmax_sweep(values, bits))
            std::cout << pt.x_max << ',' << pt.mean_sq_error << ',' << pt.max_abs_error
                      << "\n";
        if (out_path.empty()) return 0;
    }
    if (out_path.empty()) throw ConfigError("quantize needs --out (or --sweep-xmax)");
    QuantizedTensor t;
    t.shape = {static_cast<int>(values.size())};
    if (scheme == "linear") {
        if (kind == "weight") {
            // signed code: sign times the magnitude grid on one less bit
            QuantSpec mag{0.0, x_max, bits - 1, QuantScheme::Linear, dmax};
            t.spec = {0.0, x_max, bits, QuantScheme::Linear, dmax};
            for (double v : values) {
                const int32_t code = static_cast<int32_t>(quantize_linear(std::fabs(v), mag));
                t.payload.push_back(v < 0 ? -code : code);
            }
        } else {
            QuantSpec spec{0.0, x_max, bits, QuantScheme::Linear, dmax};
            t.spec = spec;
            for (double v : values)
                t.payload.push_back(static_cast<int32_t>(quantize_linear(v, spec)));
        }
    } else if (scheme == "log" || scheme == "logarithmic") {
        t.spec = {0.0, x_max, bits, QuantScheme::Logarithmic, dmax};
        for (double v : values) t.payload.push_back(pack_log(quantize_log(v, dmax)));
    } else {
        throw ConfigError("scheme must be linear or log");
    }
    save_tensor(t, out_path);
    std::cout << "quantized " << values.size() << " values -> " << out_path << "\n";
    return 0;
}

// fixed seeded operand sample reused across sweep points
std::vector<std::pair<int64_t, int64_t>> operand_sample(int n_bits, uint64_t seed, int count) {
    std::mt19937_64 g(seed);
    std::vector<std::pair<int64_t, int64_t>> v;
    const uint64_t lim = uint64_t{1} << n_bits;
    for (int i = 0; i < count; ++i)
        v.push_back({static_cast<int64_t>(g() % lim) - (int64_t{1} << (n_bits - 1)),
                     static_cast<int64_t>(g() % lim) - (int64_t{1} << (n_bits - 1))});
    return v;
}

int cmd_sweep(const CommonOpts& common, const std::string& axis,
              const std::vector<std::string>& values, const std::string& out_path,
              int batch_bits) {
    const SimConfig cfg = resolve_config(common);
    std::ostringstream os;

    auto emit_report = [&](const std::string& label, const Ledger& led, double macs) {
        const auto r =
            efficiency_report(led.energy, led.latency, cfg.cost, macs, cfg.system.banks);
        os << r.csv_row(label) << "\n";
    };

    if (axis == "bit_width") {
        os << EfficiencyReport::csv_header() << "\n";
        for (const auto& v : values) {
            const int n = std::stoi(v);
            Ledger led(cfg.energy_costs(), cfg.device.write_latency_ns);
            BoothUnit unit(n, n, cfg.adder);
            const auto sample = operand_sample(n, common.seed, 256);
            for (auto [a, w] : sample) unit.multiply(a, w, led);
            led.latency.add_cycles(Pipeline::BoothAccum,
                                   sample.size() * BoothUnit::mac_latency_cycles(n));
            emit_report(v, led, static_cast<double>(sample.size()));
        }
    } else if (axis == "d_max") {
        os << EfficiencyReport::csv_header() << "\n";
        for (const auto& v : values) {
            const int d_max = std::stoi(v);
            const ShiftMacConfig smc{8, d_max, 0, true};
            Ledger led(cfg.energy_costs(), cfg.device.write_latency_ns);
            ShiftMacUnit unit(smc, cfg.adder);
            std::mt19937_64 g(common.seed);
            for (int i = 0; i < 256; ++i) {
                ShiftTerm t0{static_cast<int64_t>(g() % 128),
                             static_cast<int>(g() % (2 * static_cast<uint64_t>(d_max) - 1)) -
                                 (d_max - 1),
                             false, false};
                ShiftTerm t1{static_cast<int64_t>(g() % 128),
                             static_cast<int>(g() % (2 * static_cast<uint64_t>(d_max) - 1)) -
                                 (d_max - 1),
                             false, false};
                const ShiftTerm terms[] = {t0, t1};
                unit.run(terms, led);
            }
            emit_report(v, led, 512.0);
        }
    } else if (axis == "batch") {
        os << "label,param_bytes_per_frame,activation_bytes_per_frame,total_bytes_per_frame,"
              "dram_energy_pj\n";
        const auto summary = vgg16_summary(batch_bits, 8);
        os.setf(std::ios::fixed);
        os.precision(2);
        for (const auto& v : values) {
            const int B = std::stoi(v);
            const auto t = dram_accesses_per_frame(summary, cfg.cost, B);
            os << v << ',' << t.param_bytes_per_frame << ',' << t.activation_bytes_per_frame
               << ',' << t.total_bytes_per_frame() << ',' << t.energy_pj(cfg.cost) << "\n";
        }
    } else if (axis == "engine" || axis == "energy_mode") {
        os << EfficiencyReport::csv_header() << "\n";
        for (const auto& v : values) {
            SimConfig point = cfg;
            Engine eng = resolve_engine(common.engine);
            if (axis == "engine") eng = resolve_engine(v);
            if (axis == "energy_mode")
                point.adder.mode = v == "baseline" ? EnergyMode::Baseline
                                                   : EnergyMode::WriteShift;
            const Model model = build_lenet5(8, eng == Engine::Shift, 8, common.seed);
            SimContext ctx(point.device, point.adder, point.system, point.energy_costs(), eng);
            const auto input = random_activations(32 * 32, 8, common.seed + 17);
            const auto result = run_inference(model, input, ctx);
            emit_report(v, ctx.ledger(), static_cast<double>(result.macs));
        }
    } else {
        throw ConfigError("axis must be bit_width, d_max, batch, engine, or energy_mode");
    }

    if (out_path.empty() || out_path == "-")
        std::cout << os.str();
    else
        write_file(out_path, os.str());
    return 0;
}

int cmd_report(const std::string& in_path, const std::string& format) {
    std::ifstream is(in_path);
    if (!is) throw IoError("cannot open report file: " + in_path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad report JSON: " + std::string(e.what()));
    }
    if (format == "json") {
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "energy/inference (pJ)  " << j.at("energy_pj").get<double>() << "\n"
              << "wall time (ns)         " << j.at("wall_ns").get<double>() << "\n"
              << "MACs                   " << j.at("macs").get<double>() << "\n"
              << "MACs/s                 " << j.at("macs_per_s").get<double>() << "\n"
              << "MACs/s/mm2             " << j.at("macs_per_s_per_mm2").get<double>() << "\n"
              << "pJ/MAC                 " << j.at("pj_per_mac").get<double>() << "\n";
    for (const auto& item : j.at("breakdown"))
        std::cout << "  " << item.at("event").get<std::string>() << "  "
                  << item.at("energy_pj").get<double>() << " pJ  "
                  << item.at("percent").get<double>() << " %\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"functional simulator for a racetrack-memory in-memory CNN accelerator"};
    app.require_subcommand(1);

    CommonOpts common;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "key=value device/system config file");
        cmd->add_option("--engine", common.engine, "booth|shift");
        cmd->add_option("--energy-mode", common.energy_mode, "baseline|write-shift");
        cmd->add_option("--out", common.out_dir, "output directory");
        cmd->add_option("--seed", common.seed, "seed fixing all randomized inputs");
    };

    auto* sim = app.add_subcommand("simulate", "run a model and emit reports");
    std::string model_path;
    std::string input_path;
    bool verify = false;
    int sim_batch = 1;
    int sim_bits = 0;
    int sim_dmax = 0;
    sim->add_option("--model", model_path, "model description JSON")->required();
    sim->add_option("--input", input_path, "input activation tensor (container file)");
    sim->add_flag("--verify", verify, "check every layer against the integer oracle");
    sim->add_option("--batch", sim_batch, "batch size for the DRAM traffic share");
    sim->add_option("--bits", sim_bits, "override the model's activation width");
    sim->add_option("--dmax", sim_dmax, "override the shift range of log layers");
    add_common(sim);

    auto* quant = app.add_subcommand("quantize", "quantize a real-valued tensor");
    std::string qin;
    std::string qout;
    std::string qscheme = "linear";
    std::string qkind = "activation";
    int qbits = 8;
    int qdmax = 8;
    double qxmax = 1.0;
    bool qsweep = false;
    quant->add_option("--in", qin, "JSON array of real values")->required();
    quant->add_option("--out", qout, "output tensor path");
    quant->add_flag("--sweep-xmax", qsweep, "report error over power-of-two x_max bounds");
    quant->add_option("--scheme", qscheme, "linear|log");
    quant->add_option("--bits", qbits, "code width");
    quant->add_option("--dmax", qdmax, "max |shift| + 1 for log codes");
    quant->add_option("--x-max", qxmax, "grid upper bound");
    quant->add_option("--kind", qkind, "weight|activation");

    auto* sweep = app.add_subcommand("sweep", "sweep one axis, one CSV row per point");
    std::string axis;
    std::vector<std::string> values;
    std::string sweep_out;
    int batch_bits = 8;
    sweep->add_option("--axis", axis, "bit_width|d_max|batch|engine|energy_mode")->required();
    sweep->add_option("--values", values, "axis points, in output order");
    sweep->add_option("--csv", sweep_out, "CSV path ('-' for stdout)");
    sweep->add_option("--bits", batch_bits, "weight bits for the batch axis");
    add_common(sweep);

    auto* rep = app.add_subcommand("report", "re-render a saved report.json");
    std::string rin;
    std::string rformat = "text";
    rep->add_option("--in", rin, "report.json path")->required();
    rep->add_option("--format", rformat, "text|json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(common, model_path, input_path, verify, sim_batch, sim_bits,
                                sim_dmax);
        if (quant->parsed())
            return cmd_quantize(qin, qout, qscheme, qbits, qdmax, qxmax, qkind, qsweep);
        if (sweep->parsed()) return cmd_sweep(common, axis, values, sweep_out, batch_bits);
        if (rep->parsed()) return cmd_report(rin, rformat);
    } catch (const VerifyError& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SimError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
