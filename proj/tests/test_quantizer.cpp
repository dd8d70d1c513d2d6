#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "rtsim/quantizer.hpp"

using namespace rtsim;

TEST_CASE("boundary values map to the boundary codes") {
    QuantSpec s{0.0, 1.0, 4, QuantScheme::Linear, 8};
    CHECK(quantize_linear(0.0, s) == 0);
    CHECK(quantize_linear(1.0, s) == 15);
    CHECK(quantize_linear(-3.5, s) == 0);  // clamp below
    CHECK(quantize_linear(42.0, s) == 15); // clamp above
}

TEST_CASE("4-bit grid on [0,1]: 0.5 ties to the level farther from zero") {
    QuantSpec s{0.0, 1.0, 4, QuantScheme::Linear, 8};
    CHECK(s.delta() == doctest::Approx(1.0 / 15.0));
    // 0.5 sits exactly between 7/15 and 8/15
    CHECK(quantize_linear(0.5, s) == 8);
}

TEST_CASE("midpoints round half away from zero on a signed grid") {
    QuantSpec s{-1.0, 1.0, 3, QuantScheme::Linear, 8}; // levels at -1, -5/7, ..., 1
    const double delta = s.delta();
    // midpoint between level 0 (-1) and level 1: farther from zero is -1
    CHECK(quantize_linear(-1.0 + delta / 2, s) == 0);
}

TEST_CASE("in-range linear quantization error is at most half a step") {
    QuantSpec s{0.0, 1.0, 6, QuantScheme::Linear, 8};
    std::mt19937_64 g(31);
    for (int i = 0; i < 5000; ++i) {
        const double x = static_cast<double>(g() % 1000001) / 1000000.0;
        const double back = dequantize_linear(quantize_linear(x, s), s);
        REQUIRE(std::fabs(back - x) <= s.delta() / 2 + 1e-12);
    }
}

TEST_CASE("quantizing an on-grid value is the identity") {
    QuantSpec s{0.0, 1.0, 5, QuantScheme::Linear, 8};
    for (uint32_t code = 0; code < 32; ++code) {
        const double v = dequantize_linear(code, s);
        CHECK(quantize_linear(v, s) == code);
    }
}

TEST_CASE("log quantization of the worked values") {
    CHECK(quantize_log(1.0, 8) == LogCode{1, 0, false});
    CHECK(quantize_log(-0.3, 8) == LogCode{-1, -2, false}); // round(log2 0.3) = -2
    CHECK(quantize_log(0.0, 8).is_zero);
}

TEST_CASE("log codes stay within half an octave of the input, and clamp") {
    std::mt19937_64 g(37);
    for (int i = 0; i < 5000; ++i) {
        const double mag = std::ldexp(1.0 + static_cast<double>(g() % 1000) / 1000.0,
                                      static_cast<int>(g() % 12) - 6);
        const double w = (g() & 1) ? mag : -mag;
        const LogCode c = quantize_log(w, 16);
        REQUIRE_FALSE(c.is_zero);
        REQUIRE(std::fabs(std::log2(std::fabs(w)) - c.exponent) <= 0.5 + 1e-12);
        REQUIRE(c.sign == (w < 0 ? -1 : 1));
    }
    CHECK(quantize_log(1024.0, 4).exponent == 3); // clamped to d_max-1
    CHECK(quantize_log(1e-9, 4).exponent == -3);
}

TEST_CASE("log code packing round-trips") {
    for (int e = -15; e <= 15; ++e) {
        for (int sgn : {-1, 1}) {
            const LogCode c{sgn, e, false};
            CHECK(unpack_log(pack_log(c)) == c);
        }
    }
    CHECK(unpack_log(pack_log(LogCode{1, 0, true})).is_zero);
}

TEST_CASE("a single word transposes to a column of its bits") {
    QuantizedTensor t;
    t.shape = {1};
    t.spec = {0.0, 1.0, 4, QuantScheme::Linear, 8};
    t.payload = {0b1010};
    const auto bp = transpose_bit_parallel(t, 1);
    CHECK(bp.layout == Layout::BitParallel);
    REQUIRE(bp.payload.size() == 4);
    CHECK(bp.payload[0] == 0);
    CHECK(bp.payload[1] == 1);
    CHECK(bp.payload[2] == 0);
    CHECK(bp.payload[3] == 1);
}

TEST_CASE("an 8-bit weight group of four occupies 8 strips x 4 positions") {
    QuantizedTensor t;
    t.shape = {4};
    t.spec = {0.0, 1.0, 8, QuantScheme::Linear, 8};
    t.payload = {1, 2, 3, 4};
    const auto bp = transpose_bit_parallel(t, 4);
    CHECK(bp.payload.size() == 8 * 4);
    CHECK(bp.bp_group == 4);
}

TEST_CASE("transpose is an involution on random tensors") {
    std::mt19937_64 g(41);
    for (int trial = 0; trial < 50; ++trial) {
        QuantizedTensor t;
        const int count = 1 + static_cast<int>(g() % 37);
        t.shape = {count};
        t.spec = {0.0, 1.0, 8, QuantScheme::Linear, 8};
        for (int i = 0; i < count; ++i)
            t.payload.push_back(static_cast<int32_t>(g() % 256));
        const auto round = transpose_bit_parallel(transpose_bit_parallel(t, 4), 4);
        REQUIRE(round.layout == Layout::BitSerial);
        REQUIRE(round.payload == t.payload);
    }
}

TEST_CASE("tensor container round-trips through binary and JSON") {
    std::mt19937_64 g(43);
    QuantizedTensor t;
    t.shape = {3, 5, 2};
    t.spec = {0.0, 2.0, 8, QuantScheme::Linear, 8};
    for (int i = 0; i < 30; ++i) t.payload.push_back(static_cast<int32_t>(g() % 256));

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "rtsim_tensor_test";
    fs::create_directories(dir);
    for (const char* name : {"t.rtt", "t.json"}) {
        const fs::path p = dir / name;
        save_tensor(t, p);
        const QuantizedTensor back = load_tensor(p);
        CHECK(back.shape == t.shape);
        CHECK(back.payload == t.payload);
        CHECK(back.spec.n_bits == t.spec.n_bits);
        CHECK(back.spec.x_max == t.spec.x_max);
        CHECK(back.layout == t.layout);
    }
    fs::remove_all(dir);
}

TEST_CASE("loading a missing tensor names the path") {
    try {
        load_tensor("/nonexistent/rtsim/missing.rtt");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("missing.rtt") != std::string::npos);
    }
}

TEST_CASE("quant spec invariants") {
    QuantSpec bad{1.0, 1.0, 8, QuantScheme::Linear, 8};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("the weight x_max sweep prefers the bound that covers the range") {
    std::mt19937_64 g(47);
    std::vector<double> weights;
    for (int i = 0; i < 2000; ++i) {
        const double v = static_cast<double>(g() % 6000) / 1000.0 - 3.0; // [-3, 3]
        weights.push_back(v);
    }
    const auto pts = weight_xmax_sweep(weights, 8);
    REQUIRE(pts.size() == 6); // 1, 2, 4, 8, 16, 32
    double best_err = pts[0].mean_sq_error;
    double best_xmax = pts[0].x_max;
    for (const auto& p : pts) {
        if (p.mean_sq_error < best_err) {
            best_err = p.mean_sq_error;
            best_xmax = p.x_max;
        }
    }
    CHECK(best_xmax == 4.0); // tightest power-of-two covering [-3, 3]
    CHECK(pts[0].max_abs_error > 1.9); // x_max = 1 clips hard
}
