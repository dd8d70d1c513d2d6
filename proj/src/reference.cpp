#include "rtsim/reference.hpp"

#include <algorithm>

#include "rtsim/errors.hpp"
#include "rtsim/util.hpp"

namespace rtsim {

namespace {

int64_t term_value(int64_t a, int32_t w, bool log_weights) {
    if (!log_weights) return a * w;
    const LogCode c = unpack_log(w);
    if (c.is_zero) return 0;
    const int64_t shifted = floor_shift(a, c.exponent);
    return c.sign < 0 ? -shifted : shifted;
}

} // namespace

int64_t ref_requantize(int64_t acc, bool relu, int output_shift, int act_bits) {
    if (relu && acc < 0) acc = 0;
    acc = floor_shift(acc, -output_shift);
    const int64_t hi = (int64_t{1} << (act_bits - 1)) - 1;
    const int64_t lo = relu ? 0 : -(int64_t{1} << (act_bits - 1));
    return std::clamp(acc, lo, hi);
}

std::vector<int64_t> reference_conv(const std::vector<int64_t>& input,
                                    const std::vector<int32_t>& weights,
                                    const std::vector<int64_t>& bias,
                                    const RefConvSpec& s) {
    const int D = (s.H - s.P + s.U) / s.U;
    const int E = (s.W - s.Q + s.U) / s.U;
    std::vector<int64_t> out(static_cast<size_t>(s.F) * D * E, 0);
    auto in_at = [&](int c, int r, int col) {
        return input[(static_cast<size_t>(c) * s.H + r) * s.W + col];
    };
    auto w_at = [&](int f, int c, int p, int q) {
        return weights[((static_cast<size_t>(f) * s.C + c) * s.P + p) * s.Q + q];
    };
    for (int f = 0; f < s.F; ++f) {
        for (int d = 0; d < D; ++d) {
            for (int e = 0; e < E; ++e) {
                int64_t acc = bias.empty() ? 0 : bias[static_cast<size_t>(f)];
                for (int c = 0; c < s.C; ++c)
                    for (int p = 0; p < s.P; ++p)
                        for (int q = 0; q < s.Q; ++q)
                            acc += term_value(in_at(c, s.U * d + p, s.U * e + q),
                                              w_at(f, c, p, q), s.log_weights);
                out[(static_cast<size_t>(f) * D + d) * E + e] =
                    ref_requantize(acc, s.relu, s.output_shift, s.act_bits);
            }
        }
    }
    return out;
}

std::vector<int64_t> reference_fc(const std::vector<int64_t>& input,
                                  const std::vector<int32_t>& weights,
                                  const std::vector<int64_t>& bias, const RefFcSpec& s) {
    std::vector<int64_t> out(static_cast<size_t>(s.out), 0);
    for (int n = 0; n < s.out; ++n) {
        int64_t acc = bias.empty() ? 0 : bias[static_cast<size_t>(n)];
        for (int m = 0; m < s.in; ++m)
            acc += term_value(input[static_cast<size_t>(m)],
                              weights[static_cast<size_t>(n) * s.in + m], s.log_weights);
        out[static_cast<size_t>(n)] = ref_requantize(acc, s.relu, s.output_shift, s.act_bits);
    }
    return out;
}

std::vector<int64_t> reference_batchnorm(const std::vector<int64_t>& input,
                                         const std::vector<int64_t>& mu,
                                         const std::vector<int64_t>& beta,
                                         const std::vector<int64_t>& scale_num,
                                         const RefBnSpec& s) {
    std::vector<int64_t> out(input.size(), 0);
    const int64_t hi = (int64_t{1} << (s.act_bits - 1)) - 1;
    const int64_t lo = -(int64_t{1} << (s.act_bits - 1));
    for (int c = 0; c < s.C; ++c) {
        for (int i = 0; i < s.H * s.W; ++i) {
            const size_t idx = static_cast<size_t>(c) * s.H * s.W + static_cast<size_t>(i);
            const int64_t centered = input[idx] - mu[static_cast<size_t>(c)];
            const int64_t scaled =
                floor_shift(centered * scale_num[static_cast<size_t>(c)], -s.frac_bits);
            out[idx] = std::clamp(scaled + beta[static_cast<size_t>(c)], lo, hi);
        }
    }
    return out;
}

std::vector<int64_t> reference_pool(const std::vector<int64_t>& input, int C, int H, int W,
                                    int window, PoolKind kind) {
    if (H % window != 0 || W % window != 0)
        throw SimError("pooling window must divide the activation dimensions");
    const int oh = H / window;
    const int ow = W / window;
    std::vector<int64_t> out(static_cast<size_t>(C) * oh * ow, 0);
    const int shift = nearest_pow2_exponent(static_cast<uint64_t>(window) * window);
    for (int c = 0; c < C; ++c) {
        for (int r = 0; r < oh; ++r) {
            for (int col = 0; col < ow; ++col) {
                int64_t acc = 0;
                int64_t best = 0;
                bool first = true;
                for (int i = 0; i < window; ++i) {
                    for (int j = 0; j < window; ++j) {
                        const int64_t v = input[(static_cast<size_t>(c) * H + r * window + i) * W +
                                                col * window + j];
                        acc += v;
                        if (first || v > best) best = v;
                        first = false;
                    }
                }
                out[(static_cast<size_t>(c) * oh + r) * ow + col] =
                    kind == PoolKind::Avg ? floor_shift(acc, -shift) : best;
            }
        }
    }
    return out;
}

} // namespace rtsim
