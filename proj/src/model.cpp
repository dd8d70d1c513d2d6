#include "rtsim/model.hpp"

#include <fstream>

#include <json.hpp>

#include "rtsim/cost_model.hpp"
#include "rtsim/quantizer.hpp"
#include "rtsim/reference.hpp"
#include "rtsim/util.hpp"

namespace rtsim {

namespace {

uint64_t rng_below(std::mt19937_64& g, uint64_t n) { return g() % n; }

std::vector<int32_t> random_linear_weights(size_t count, int weight_bits, std::mt19937_64& g) {
    const int64_t mag = (int64_t{1} << (weight_bits - 1)) - 1;
    std::vector<int32_t> w(count);
    for (auto& v : w)
        v = static_cast<int32_t>(static_cast<int64_t>(rng_below(g, 2 * mag + 1)) - mag);
    return w;
}

std::vector<int32_t> random_log_weights(size_t count, int d_max, std::mt19937_64& g) {
    std::vector<int32_t> w(count);
    for (auto& v : w) {
        LogCode c;
        if (rng_below(g, 16) == 0) {
            c.is_zero = true;
        } else {
            c.sign = rng_below(g, 2) ? 1 : -1;
            // CNN weight magnitudes stay at or below one
            c.exponent = -static_cast<int>(rng_below(g, static_cast<uint64_t>(d_max)));
        }
        v = pack_log(c);
    }
    return w;
}

std::vector<int64_t> random_bias(size_t count, int act_bits, std::mt19937_64& g) {
    const int64_t mag = (int64_t{1} << act_bits) - 1;
    std::vector<int64_t> b(count);
    for (auto& v : b) v = static_cast<int64_t>(rng_below(g, 2 * mag + 1)) - mag;
    return b;
}

int default_output_shift(uint64_t fan_in, int weight_bits) {
    return weight_bits - 2 + ceil_log2(fan_in) / 2;
}

} // namespace

uint64_t Model::total_macs() const {
    uint64_t macs = 0;
    for (const auto& l : layers) {
        switch (l.type) {
            case LayerType::Conv:
                macs += static_cast<uint64_t>(l.conv.shape.F) * l.conv.shape.out_h() *
                        l.conv.shape.out_w() * l.conv.shape.C * l.conv.shape.P * l.conv.shape.Q;
                break;
            case LayerType::Fc:
                macs += static_cast<uint64_t>(l.fc.in) * l.fc.out;
                break;
            case LayerType::BatchNorm:
                macs += static_cast<uint64_t>(l.bn.C) * l.bn.H * l.bn.W;
                break;
            default:
                break;
        }
    }
    return macs;
}

uint64_t Model::param_count() const {
    uint64_t p = 0;
    for (const auto& l : layers) {
        switch (l.type) {
            case LayerType::Conv:
                p += l.conv.weights.size() + l.conv.bias.size();
                break;
            case LayerType::Fc:
                p += l.fc.weights.size() + l.fc.bias.size();
                break;
            case LayerType::BatchNorm:
                p += 4 * static_cast<uint64_t>(l.bn.C);
                break;
            default:
                break;
        }
    }
    return p;
}

namespace {

std::vector<int32_t> load_weight_payload(const nlohmann::json& jw,
                                         const std::filesystem::path& base, size_t count,
                                         bool log_weights, int weight_bits, int d_max,
                                         std::mt19937_64& g) {
    if (jw.is_string()) {
        std::filesystem::path p = jw.get<std::string>();
        if (p.is_relative()) p = base / p;
        const QuantizedTensor t = load_tensor(p);
        if (t.element_count() != count)
            throw ConfigError("weight tensor " + p.string() + " has wrong element count");
        return t.payload;
    }
    if (jw.is_object() && jw.contains("random")) {
        return log_weights ? random_log_weights(count, d_max, g)
                           : random_linear_weights(count, weight_bits, g);
    }
    throw ConfigError("weights must be a tensor path or {\"random\": {...}}");
}

std::vector<int64_t> load_bias_payload(const nlohmann::json& j,
                                       const std::filesystem::path& base, size_t count,
                                       int act_bits, std::mt19937_64& g) {
    if (!j.contains("bias")) return std::vector<int64_t>(count, 0);
    const auto& jb = j.at("bias");
    if (jb.is_string()) {
        std::filesystem::path p = jb.get<std::string>();
        if (p.is_relative()) p = base / p;
        const QuantizedTensor t = load_tensor(p);
        if (t.element_count() != count)
            throw ConfigError("bias tensor " + p.string() + " has wrong element count");
        std::vector<int64_t> b(t.payload.begin(), t.payload.end());
        return b;
    }
    if (jb.is_object() && jb.contains("random")) return random_bias(count, act_bits, g);
    throw ConfigError("bias must be a tensor path or {\"random\": {...}}");
}

} // namespace

Model load_model(const std::filesystem::path& path, uint64_t seed, int bits_override,
                 int dmax_override) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad model JSON " + path.string() + ": " + e.what());
    }
    if (bits_override > 0) j["act_bits"] = bits_override;
    if (dmax_override > 0)
        for (auto& jl : j.at("layers"))
            if (jl.contains("d_max") || jl.value("log_weights", false))
                jl["d_max"] = dmax_override;

    std::mt19937_64 g(seed);
    Model m;
    m.name = j.value("name", path.stem().string());
    m.in_c = j.at("input").at("C");
    m.in_h = j.at("input").at("H");
    m.in_w = j.at("input").at("W");
    m.act_bits = j.value("act_bits", 8);

    int c = m.in_c, h = m.in_h, w = m.in_w;
    const auto base = path.parent_path();
    for (const auto& jl : j.at("layers")) {
        const std::string type = jl.at("type");
        ModelLayer layer;
        if (type == "conv") {
            layer.type = LayerType::Conv;
            auto& s = layer.conv;
            s.shape = {c, h, w, jl.at("F"), jl.at("P"), jl.at("Q"), jl.value("U", 1)};
            s.log_weights = jl.value("log_weights", false);
            s.weight_bits = jl.value("weight_bits", m.act_bits);
            s.d_max = jl.value("d_max", 8);
            s.act_bits = m.act_bits;
            s.relu = jl.value("relu", true);
            const size_t wcount = static_cast<size_t>(s.shape.F) * s.shape.C * s.shape.P * s.shape.Q;
            s.weights = load_weight_payload(jl.at("weights"), base, wcount, s.log_weights,
                                            s.weight_bits, s.d_max, g);
            s.bias = load_bias_payload(jl, base, static_cast<size_t>(s.shape.F), m.act_bits, g);
            const uint64_t fan_in = static_cast<uint64_t>(s.shape.C) * s.shape.P * s.shape.Q;
            s.output_shift =
                jl.value("output_shift", default_output_shift(fan_in, s.weight_bits));
            c = s.shape.F;
            h = s.shape.out_h();
            w = s.shape.out_w();
        } else if (type == "fc") {
            layer.type = LayerType::Fc;
            auto& s = layer.fc;
            s.in = c * h * w;
            s.out = jl.at("out");
            s.log_weights = jl.value("log_weights", false);
            s.weight_bits = jl.value("weight_bits", m.act_bits);
            s.d_max = jl.value("d_max", 8);
            s.act_bits = m.act_bits;
            s.relu = jl.value("relu", true);
            const size_t wcount = static_cast<size_t>(s.in) * s.out;
            s.weights = load_weight_payload(jl.at("weights"), base, wcount, s.log_weights,
                                            s.weight_bits, s.d_max, g);
            s.bias = load_bias_payload(jl, base, static_cast<size_t>(s.out), m.act_bits, g);
            s.output_shift = jl.value("output_shift",
                                      default_output_shift(static_cast<uint64_t>(s.in),
                                                           s.weight_bits));
            c = 1;
            h = 1;
            w = s.out;
        } else if (type == "batchnorm") {
            layer.type = LayerType::BatchNorm;
            auto& s = layer.bn;
            s.C = c;
            s.H = h;
            s.W = w;
            s.act_bits = m.act_bits;
            s.weight_bits = jl.value("weight_bits", m.act_bits);
            s.frac_bits = jl.value("frac_bits", s.weight_bits - 2);
            if (jl.contains("params") && jl.at("params").is_string()) {
                std::filesystem::path p = jl.at("params").get<std::string>();
                if (p.is_relative()) p = base / p;
                std::ifstream ps(p);
                if (!ps) throw IoError("cannot open batchnorm params file: " + p.string());
                nlohmann::json pj;
                ps >> pj;
                s.mu = pj.at("mu").get<std::vector<int64_t>>();
                s.beta = pj.at("beta").get<std::vector<int64_t>>();
                s.scale_num = pj.at("scale_num").get<std::vector<int64_t>>();
                s.frac_bits = pj.value("frac_bits", s.frac_bits);
            } else {
                const int64_t act_mag = (int64_t{1} << (m.act_bits - 1)) - 1;
                const int64_t s_mag = (int64_t{1} << (s.weight_bits - 1)) - 1;
                s.mu.resize(static_cast<size_t>(c));
                s.beta.resize(static_cast<size_t>(c));
                s.scale_num.resize(static_cast<size_t>(c));
                for (int i = 0; i < c; ++i) {
                    s.mu[static_cast<size_t>(i)] =
                        static_cast<int64_t>(rng_below(g, 2 * act_mag + 1)) - act_mag;
                    s.beta[static_cast<size_t>(i)] =
                        static_cast<int64_t>(rng_below(g, 2 * act_mag + 1)) - act_mag;
                    s.scale_num[static_cast<size_t>(i)] =
                        static_cast<int64_t>(rng_below(g, 2 * s_mag + 1)) - s_mag;
                }
            }
        } else if (type == "avgpool" || type == "maxpool") {
            layer.type = type == "avgpool" ? LayerType::AvgPool : LayerType::MaxPool;
            auto& s = layer.pool;
            s.C = c;
            s.H = h;
            s.W = w;
            s.window = jl.value("window", 2);
            s.kind = type == "avgpool" ? PoolKind::Avg : PoolKind::Max;
            s.act_bits = m.act_bits;
            h /= s.window;
            w /= s.window;
        } else {
            throw ConfigError("unknown layer type: " + type);
        }
        m.layers.push_back(std::move(layer));
    }
    return m;
}

Model build_lenet5(int act_bits, bool log_weights, int d_max, uint64_t seed) {
    std::mt19937_64 g(seed);
    Model m;
    m.name = log_weights ? "lenet5-log" : "lenet5";
    m.in_c = 1;
    m.in_h = 32;
    m.in_w = 32;
    m.act_bits = act_bits;

    auto add_conv = [&](int in_c, int in_hw, int f) {
        ModelLayer l;
        l.type = LayerType::Conv;
        auto& s = l.conv;
        s.shape = {in_c, in_hw, in_hw, f, 5, 5, 1};
        s.log_weights = log_weights;
        s.weight_bits = act_bits;
        s.d_max = d_max;
        s.act_bits = act_bits;
        s.relu = true;
        const size_t wc = static_cast<size_t>(f) * in_c * 25;
        s.weights = log_weights ? random_log_weights(wc, d_max, g)
                                : random_linear_weights(wc, act_bits, g);
        s.bias = random_bias(static_cast<size_t>(f), act_bits, g);
        s.output_shift =
            default_output_shift(static_cast<uint64_t>(in_c) * 25, act_bits);
        m.layers.push_back(std::move(l));
    };
    auto add_pool = [&](int c, int hw) {
        ModelLayer l;
        l.type = LayerType::AvgPool;
        l.pool = {c, hw, hw, 2, PoolKind::Avg, act_bits, false};
        m.layers.push_back(std::move(l));
    };
    auto add_fc = [&](int in, int out, bool relu) {
        ModelLayer l;
        l.type = LayerType::Fc;
        auto& s = l.fc;
        s.in = in;
        s.out = out;
        s.log_weights = log_weights;
        s.weight_bits = act_bits;
        s.d_max = d_max;
        s.act_bits = act_bits;
        s.relu = relu;
        const size_t wc = static_cast<size_t>(in) * out;
        s.weights = log_weights ? random_log_weights(wc, d_max, g)
                                : random_linear_weights(wc, act_bits, g);
        s.bias = random_bias(static_cast<size_t>(out), act_bits, g);
        s.output_shift = default_output_shift(static_cast<uint64_t>(in), act_bits);
        m.layers.push_back(std::move(l));
    };

    add_conv(1, 32, 6);   // 32x32x1 -> 28x28x6
    add_pool(6, 28);      // -> 14x14x6
    add_conv(6, 14, 16);  // -> 10x10x16
    add_pool(16, 10);     // -> 5x5x16
    add_fc(400, 120, true);
    add_fc(120, 84, true);
    add_fc(84, 10, false); // logits
    return m;
}

ModelSummary summarize_model(const Model& model) {
    ModelSummary s;
    s.name = model.name;
    s.input_bytes = static_cast<uint64_t>(model.in_c) * model.in_h * model.in_w *
                    static_cast<uint64_t>(model.act_bits) / 8;
    s.total_macs = model.total_macs();
    auto weight_bits_of = [](bool log_weights, int weight_bits, int d_max) {
        if (!log_weights) return weight_bits;
        return ceil_log2(static_cast<uint64_t>(d_max)) + 1; // sign + exponent magnitude
    };
    int c = model.in_c, h = model.in_h, w = model.in_w;
    int idx = 0;
    for (const auto& l : model.layers) {
        LayerSummary ls;
        ls.name = "layer" + std::to_string(idx++);
        switch (l.type) {
            case LayerType::Conv: {
                const int wb = weight_bits_of(l.conv.log_weights, l.conv.weight_bits,
                                              l.conv.d_max);
                ls.param_bytes = ((l.conv.weights.size() * static_cast<uint64_t>(wb)) +
                                  l.conv.bias.size() * static_cast<uint64_t>(model.act_bits) +
                                  7) / 8;
                c = l.conv.shape.F;
                h = l.conv.shape.out_h();
                w = l.conv.shape.out_w();
                break;
            }
            case LayerType::Fc: {
                const int wb = weight_bits_of(l.fc.log_weights, l.fc.weight_bits, l.fc.d_max);
                ls.param_bytes = ((l.fc.weights.size() * static_cast<uint64_t>(wb)) +
                                  l.fc.bias.size() * static_cast<uint64_t>(model.act_bits) +
                                  7) / 8;
                ls.is_fc = true;
                c = 1;
                h = 1;
                w = l.fc.out;
                break;
            }
            case LayerType::BatchNorm:
                ls.param_bytes = 4ull * static_cast<uint64_t>(l.bn.C) *
                                 static_cast<uint64_t>(model.act_bits) / 8;
                break;
            case LayerType::AvgPool:
            case LayerType::MaxPool:
                h /= l.pool.window;
                w /= l.pool.window;
                break;
        }
        ls.out_activation_bytes = static_cast<uint64_t>(c) * h * w *
                                  static_cast<uint64_t>(model.act_bits) / 8;
        s.layers.push_back(ls);
    }
    return s;
}

std::vector<int64_t> random_activations(int count, int act_bits, uint64_t seed) {
    std::mt19937_64 g(seed);
    const uint64_t top = uint64_t{1} << (act_bits - 1); // nonneg codes in the signed word
    std::vector<int64_t> v(static_cast<size_t>(count));
    for (auto& x : v) x = static_cast<int64_t>(rng_below(g, top));
    return v;
}

InferenceResult run_inference(const Model& model, const std::vector<int64_t>& input,
                              SimContext& ctx, bool verify) {
    if (input.size() != static_cast<size_t>(model.in_c) * model.in_h * model.in_w)
        throw SimError("inference input size does not match model input shape");

    std::vector<int64_t> act = input;
    int layer_idx = 0;
    for (const auto& l : model.layers) {
        std::vector<int64_t> next;
        switch (l.type) {
            case LayerType::Conv: {
                const auto placement =
                    place_conv_layer(l.conv.shape, ctx.system(), ctx.device(), l.conv.act_bits,
                                     l.conv.weight_bits, ctx.system().acc_bits);
                next = run_conv(act, l.conv, placement, ctx);
                if (verify) {
                    RefConvSpec rs{l.conv.shape.C, l.conv.shape.H, l.conv.shape.W,
                                   l.conv.shape.F, l.conv.shape.P, l.conv.shape.Q,
                                   l.conv.shape.U, l.conv.log_weights, l.conv.output_shift,
                                   l.conv.relu, l.conv.act_bits};
                    if (next != reference_conv(act, l.conv.weights, l.conv.bias, rs))
                        throw VerifyError("layer " + std::to_string(layer_idx) +
                                          " (conv) diverges from the integer oracle");
                }
                break;
            }
            case LayerType::Fc: {
                next = run_fc(act, l.fc, ctx);
                if (verify) {
                    RefFcSpec rs{l.fc.in, l.fc.out, l.fc.log_weights, l.fc.output_shift,
                                 l.fc.relu, l.fc.act_bits};
                    if (next != reference_fc(act, l.fc.weights, l.fc.bias, rs))
                        throw VerifyError("layer " + std::to_string(layer_idx) +
                                          " (fc) diverges from the integer oracle");
                }
                break;
            }
            case LayerType::BatchNorm: {
                next = run_batchnorm(act, l.bn, ctx);
                if (verify) {
                    RefBnSpec rs{l.bn.C, l.bn.H, l.bn.W, l.bn.frac_bits, l.bn.act_bits};
                    if (next != reference_batchnorm(act, l.bn.mu, l.bn.beta, l.bn.scale_num, rs))
                        throw VerifyError("layer " + std::to_string(layer_idx) +
                                          " (batchnorm) diverges from the integer oracle");
                }
                break;
            }
            case LayerType::AvgPool:
            case LayerType::MaxPool: {
                PoolLayerSpec spec = l.pool;
                next = run_pool(act, spec, ctx);
                if (verify) {
                    if (next != reference_pool(act, l.pool.C, l.pool.H, l.pool.W, l.pool.window,
                                               l.pool.kind))
                        throw VerifyError("layer " + std::to_string(layer_idx) +
                                          " (pool) diverges from the integer oracle");
                }
                break;
            }
        }
        act = std::move(next);
        ++layer_idx;
    }
    return {std::move(act), model.total_macs()};
}

} // namespace rtsim
