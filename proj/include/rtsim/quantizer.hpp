#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rtsim/errors.hpp"

namespace rtsim {

enum class QuantScheme { Linear, Logarithmic };
enum class Layout { BitSerial, BitParallel };

struct QuantSpec {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_bits = 8;
    QuantScheme scheme = QuantScheme::Linear;
    int d_max = 8; // logarithmic only

    int levels() const { return 1 << n_bits; }
    double delta() const { return (x_max - x_min) / (levels() - 1); }
    void validate() const;
};

struct LogCode {
    int sign = 1;      // +1 / -1
    int exponent = 0;  // clamped to [-(d_max-1), d_max-1]
    bool is_zero = false;
    bool operator==(const LogCode&) const = default;
};

// Nearest-level code for Eq-style linear grids; out-of-range values clamp to
// the boundary levels, exact midpoints round to the level farther from zero.
uint32_t quantize_linear(double x, const QuantSpec& spec);
double dequantize_linear(uint32_t code, const QuantSpec& spec);

// Closest signed power of two; zero maps to the dedicated zero code.
LogCode quantize_log(double w, int d_max);
double dequantize_log(const LogCode& code);

// int32 packing for log codes inside tensor payloads.
int32_t pack_log(const LogCode& c);
LogCode unpack_log(int32_t v);

struct QuantizedTensor {
    std::vector<int> shape;
    QuantSpec spec;
    Layout layout = Layout::BitSerial;
    int bp_group = 0; // word group size used by the bit-parallel layout
    std::vector<int32_t> payload;

    size_t element_count() const;
    void validate() const;
};

// Bit b of every word in a group of `group` words lands in strip b; applying
// the transpose twice returns the original tensor.
QuantizedTensor transpose_bit_parallel(const QuantizedTensor& t, int group = 4);

// Self-describing binary container (magic "RTQT") and a JSON twin for
// desk-scale tensors; the extension picks the format (.json vs anything else).
void save_tensor(const QuantizedTensor& t, const std::filesystem::path& path);
QuantizedTensor load_tensor(const std::filesystem::path& path);

// Weight-grid bound search: quantization error of sign-magnitude linear
// codes over the power-of-two x_max candidates {1, 2, ..., 32}. Accuracy
// selection happens downstream; this reports the reconstruction error only.
struct XmaxSweepPoint {
    double x_max = 0;
    double mean_sq_error = 0;
    double max_abs_error = 0;
};
std::vector<XmaxSweepPoint> weight_xmax_sweep(const std::vector<double>& weights, int n_bits);

} // namespace rtsim
