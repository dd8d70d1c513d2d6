#include "rtsim/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "rtsim/util.hpp"

namespace rtsim {

void QuantSpec::validate() const {
    if (!(x_min < x_max)) throw ConfigError("quant spec needs x_min < x_max");
    if (n_bits < 1 || n_bits > 24) throw ConfigError("quant spec n_bits out of range");
    if (scheme == QuantScheme::Logarithmic && d_max < 1)
        throw ConfigError("logarithmic quant spec needs d_max >= 1");
}

uint32_t quantize_linear(double x, const QuantSpec& spec) {
    spec.validate();
    const int top = spec.levels() - 1;
    if (x <= spec.x_min) return 0;
    if (x >= spec.x_max) return static_cast<uint32_t>(top);
    const double delta = spec.delta();
    const double t = (x - spec.x_min) / delta;
    int k = static_cast<int>(std::floor(t));
    if (k >= top) k = top - 1;
    const double mid = spec.x_min + (k + 0.5) * delta;
    if (x > mid) return static_cast<uint32_t>(k + 1);
    if (x < mid) return static_cast<uint32_t>(k);
    // exact midpoint: round half away from zero on the level values
    const double lo = spec.x_min + k * delta;
    const double hi = lo + delta;
    return static_cast<uint32_t>(std::fabs(hi) >= std::fabs(lo) ? k + 1 : k);
}

double dequantize_linear(uint32_t code, const QuantSpec& spec) {
    return spec.x_min + static_cast<double>(code) * spec.delta();
}

LogCode quantize_log(double w, int d_max) {
    LogCode c;
    if (w == 0.0) {
        c.is_zero = true;
        return c;
    }
    c.sign = w < 0 ? -1 : 1;
    const double e = std::log2(std::fabs(w));
    int exp = static_cast<int>(std::floor(e + 0.5)); // round half up
    exp = std::clamp(exp, -(d_max - 1), d_max - 1);
    c.exponent = exp;
    return c;
}

double dequantize_log(const LogCode& code) {
    if (code.is_zero) return 0.0;
    return static_cast<double>(code.sign) * std::ldexp(1.0, code.exponent);
}

int32_t pack_log(const LogCode& c) {
    if (c.is_zero) return 1 << 9;
    return (c.exponent + 128) | ((c.sign < 0 ? 1 : 0) << 8);
}

LogCode unpack_log(int32_t v) {
    LogCode c;
    if (v & (1 << 9)) {
        c.is_zero = true;
        return c;
    }
    c.sign = (v & (1 << 8)) ? -1 : 1;
    c.exponent = (v & 0xff) - 128;
    return c;
}

size_t QuantizedTensor::element_count() const {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
}

void QuantizedTensor::validate() const {
    spec.validate();
    for (int d : shape)
        if (d <= 0) throw ConfigError("tensor dims must be strictly positive");
    if (layout == Layout::BitSerial && payload.size() != element_count())
        throw ConfigError("bit-serial payload size does not match shape");
}

QuantizedTensor transpose_bit_parallel(const QuantizedTensor& t, int group) {
    if (group < 1) throw ConfigError("transpose group must be >= 1");
    const int n = t.spec.n_bits;

    if (t.layout == Layout::BitSerial) {
        if (t.spec.scheme != QuantScheme::Linear)
            throw ConfigError("bit-parallel transposition applies to linear codes");
        const size_t count = t.element_count();
        const size_t groups = (count + static_cast<size_t>(group) - 1) / static_cast<size_t>(group);
        QuantizedTensor out = t;
        out.layout = Layout::BitParallel;
        out.bp_group = group;
        out.payload.assign(groups * static_cast<size_t>(n) * static_cast<size_t>(group), 0);
        for (size_t g = 0; g < groups; ++g) {
            for (int b = 0; b < n; ++b) {
                for (int k = 0; k < group; ++k) {
                    const size_t src = g * static_cast<size_t>(group) + static_cast<size_t>(k);
                    const int32_t word = src < count ? t.payload[src] : 0;
                    out.payload[(g * static_cast<size_t>(n) + static_cast<size_t>(b)) *
                                    static_cast<size_t>(group) +
                                static_cast<size_t>(k)] = (word >> b) & 1;
                }
            }
        }
        return out;
    }

    // inverse: gather strips back into words
    const int g_sz = t.bp_group > 0 ? t.bp_group : group;
    QuantizedTensor out = t;
    out.layout = Layout::BitSerial;
    out.bp_group = 0;
    const size_t count = t.element_count();
    out.payload.assign(count, 0);
    const size_t groups = (count + static_cast<size_t>(g_sz) - 1) / static_cast<size_t>(g_sz);
    for (size_t g = 0; g < groups; ++g) {
        for (int b = 0; b < n; ++b) {
            for (int k = 0; k < g_sz; ++k) {
                const size_t dst = g * static_cast<size_t>(g_sz) + static_cast<size_t>(k);
                if (dst >= count) continue;
                const int32_t bit =
                    t.payload[(g * static_cast<size_t>(n) + static_cast<size_t>(b)) *
                                  static_cast<size_t>(g_sz) +
                              static_cast<size_t>(k)] & 1;
                out.payload[dst] |= bit << b;
            }
        }
    }
    return out;
}

namespace {

constexpr uint32_t kMagic = 0x54515452; // "RTQT"
constexpr uint16_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated tensor file");
    return v;
}

void save_binary(const QuantizedTensor& t, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open tensor file for writing: " + path.string());
    put(os, kMagic);
    put(os, kVersion);
    put(os, static_cast<uint8_t>(t.spec.scheme));
    put(os, static_cast<uint8_t>(t.layout));
    put(os, static_cast<uint8_t>(t.spec.n_bits));
    put(os, static_cast<uint8_t>(t.spec.d_max));
    put(os, static_cast<uint8_t>(t.bp_group));
    put(os, static_cast<uint8_t>(0)); // reserved
    put(os, t.spec.x_min);
    put(os, t.spec.x_max);
    put(os, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put(os, static_cast<uint32_t>(d));
    put(os, static_cast<uint64_t>(t.payload.size()));
    os.write(reinterpret_cast<const char*>(t.payload.data()),
             static_cast<std::streamsize>(t.payload.size() * sizeof(int32_t)));
    if (!os) throw IoError("failed writing tensor file: " + path.string());
}

QuantizedTensor load_binary(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open tensor file: " + path.string());
    if (get<uint32_t>(is) != kMagic) throw IoError("bad tensor magic: " + path.string());
    if (get<uint16_t>(is) != kVersion) throw IoError("unsupported tensor version: " + path.string());
    QuantizedTensor t;
    t.spec.scheme = static_cast<QuantScheme>(get<uint8_t>(is));
    t.layout = static_cast<Layout>(get<uint8_t>(is));
    t.spec.n_bits = get<uint8_t>(is);
    t.spec.d_max = get<uint8_t>(is);
    t.bp_group = get<uint8_t>(is);
    get<uint8_t>(is);
    t.spec.x_min = get<double>(is);
    t.spec.x_max = get<double>(is);
    const uint32_t rank = get<uint32_t>(is);
    if (rank > 8) throw IoError("tensor rank out of range: " + path.string());
    for (uint32_t i = 0; i < rank; ++i) t.shape.push_back(static_cast<int>(get<uint32_t>(is)));
    const uint64_t n = get<uint64_t>(is);
    t.payload.resize(n);
    is.read(reinterpret_cast<char*>(t.payload.data()),
            static_cast<std::streamsize>(n * sizeof(int32_t)));
    if (!is) throw IoError("truncated tensor payload: " + path.string());
    return t;
}

void save_json(const QuantizedTensor& t, const std::filesystem::path& path) {
    nlohmann::json j;
    j["magic"] = "RTQT";
    j["version"] = kVersion;
    j["scheme"] = t.spec.scheme == QuantScheme::Linear ? "linear" : "logarithmic";
    j["layout"] = t.layout == Layout::BitSerial ? "bit_serial" : "bit_parallel";
    j["n_bits"] = t.spec.n_bits;
    j["d_max"] = t.spec.d_max;
    j["bp_group"] = t.bp_group;
    j["x_min"] = t.spec.x_min;
    j["x_max"] = t.spec.x_max;
    j["shape"] = t.shape;
    j["payload"] = t.payload;
    std::ofstream os(path);
    if (!os) throw IoError("cannot open tensor file for writing: " + path.string());
    os << j.dump(2) << "\n";
}

QuantizedTensor load_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open tensor file: " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad tensor JSON " + path.string() + ": " + e.what());
    }
    QuantizedTensor t;
    t.spec.scheme = j.at("scheme") == "linear" ? QuantScheme::Linear : QuantScheme::Logarithmic;
    t.layout = j.at("layout") == "bit_serial" ? Layout::BitSerial : Layout::BitParallel;
    t.spec.n_bits = j.at("n_bits");
    t.spec.d_max = j.at("d_max");
    t.bp_group = j.value("bp_group", 0);
    t.spec.x_min = j.at("x_min");
    t.spec.x_max = j.at("x_max");
    t.shape = j.at("shape").get<std::vector<int>>();
    t.payload = j.at("payload").get<std::vector<int32_t>>();
    return t;
}

} // namespace

std::vector<XmaxSweepPoint> weight_xmax_sweep(const std::vector<double>& weights, int n_bits) {
    std::vector<XmaxSweepPoint> points;
    for (double x_max = 1.0; x_max <= 32.0; x_max *= 2.0) {
        const QuantSpec mag{0.0, x_max, n_bits - 1, QuantScheme::Linear, 8};
        XmaxSweepPoint pt;
        pt.x_max = x_max;
        for (double w : weights) {
            const uint32_t code = quantize_linear(std::fabs(w), mag);
            const double back = std::copysign(dequantize_linear(code, mag), w);
            const double err = back - w;
            pt.mean_sq_error += err * err;
            pt.max_abs_error = std::max(pt.max_abs_error, std::fabs(err));
        }
        if (!weights.empty()) pt.mean_sq_error /= static_cast<double>(weights.size());
        points.push_back(pt);
    }
    return points;
}

void save_tensor(const QuantizedTensor& t, const std::filesystem::path& path) {
    if (path.extension() == ".json")
        save_json(t, path);
    else
        save_binary(t, path);
}

QuantizedTensor load_tensor(const std::filesystem::path& path) {
    if (path.extension() == ".json") return load_json(path);
    return load_binary(path);
}

} // namespace rtsim
