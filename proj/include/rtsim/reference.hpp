#pragma once

#include <cstdint>
#include <vector>

#include "rtsim/quantizer.hpp"

namespace rtsim {

// Straight-line integer semantics of every layer, kept independent of the
// bit-serial datapaths so simulator outputs can be checked against it.

struct RefConvSpec {
    int C, H, W, F, P, Q, U = 1;
    bool log_weights = false;
    int output_shift = 0;
    bool relu = true;
    int act_bits = 8; // output clamp range
};

struct RefFcSpec {
    int in, out;
    bool log_weights = false;
    int output_shift = 0;
    bool relu = true;
    int act_bits = 8;
};

struct RefBnSpec {
    int C, H, W;
    int frac_bits = 7;
    int act_bits = 8;
};

// weights: linear -> signed codes, one per element; log -> packed log codes.
// Log products apply per-term floor semantics with the negation last:
// term = sign * floor_shift(activation, exponent).
std::vector<int64_t> reference_conv(const std::vector<int64_t>& input,
                                    const std::vector<int32_t>& weights,
                                    const std::vector<int64_t>& bias,
                                    const RefConvSpec& spec);

std::vector<int64_t> reference_fc(const std::vector<int64_t>& input,
                                  const std::vector<int32_t>& weights,
                                  const std::vector<int64_t>& bias, const RefFcSpec& spec);

std::vector<int64_t> reference_batchnorm(const std::vector<int64_t>& input,
                                         const std::vector<int64_t>& mu,
                                         const std::vector<int64_t>& beta,
                                         const std::vector<int64_t>& scale_num,
                                         const RefBnSpec& spec);

enum class PoolKind { Avg, Max };

std::vector<int64_t> reference_pool(const std::vector<int64_t>& input, int C, int H, int W,
                                    int window, PoolKind kind);

int64_t ref_requantize(int64_t acc, bool relu, int output_shift, int act_bits);

} // namespace rtsim
