#include <doctest.h>

#include <random>

#include "rtsim/cost_model.hpp"
#include "rtsim/shift_mac.hpp"

using namespace rtsim;

namespace {

Ledger make_ledger() {
    return Ledger(make_energy_costs(DeviceParams{}, AdderEnergyModel{}, CostParams{}), 5.0);
}

// independent oracle: floor-shift by repeated exact halving
int64_t oracle_floor_shift(int64_t a, int d) {
    if (d >= 0) {
        for (int i = 0; i < d; ++i) a *= 2;
        return a;
    }
    for (int i = 0; i < -d; ++i) {
        // floor division by 2
        a = (a - ((a % 2 + 2) % 2)) / 2;
    }
    return a;
}

} // namespace

TEST_CASE("4-bit counter enables when the top two bits are 10") {
    const ShiftMacConfig cfg{4, 4, 0, true};
    CHECK(cfg.counter_width() == 4);
    CHECK(cfg.window_len() == 4);
    for (uint32_t v = 0; v < 16; ++v) {
        const bool expect = v >= 0b1000 && v <= 0b1011;
        CHECK(shift_enabled(v, cfg) == expect);
    }
    // boundary: the value just after the window holds for sign extension
    CHECK_FALSE(shift_enabled(0b0111, cfg));
    CHECK_FALSE(shift_enabled(0b1100, cfg));
}

TEST_CASE("over a full counter wrap the enabled count is exactly n_b") {
    for (const int n_b : {4, 8, 16}) {
        for (const int d_max : {4, 8, 16}) {
            const ShiftMacConfig cfg{n_b, d_max, 0, true};
            int enabled = 0;
            const uint32_t states = 1u << cfg.counter_width();
            for (uint32_t v = 0; v < states; ++v)
                if (shift_enabled(v, cfg)) ++enabled;
            CHECK(enabled == n_b);
        }
    }
}

TEST_CASE("counter walk enters the window at the scheduled cycle, once") {
    const ShiftMacConfig cfg{4, 4, 0, true};
    for (int d = -3; d <= 3; ++d) {
        TrackCounter tc;
        tc.init(d, cfg);
        int first = 0;
        int runs = 0;
        bool in_window = false;
        const int cycles = cfg.n_b + 2 * cfg.max_distance();
        for (int t = 1; t <= cycles; ++t) {
            tc.decrement(cfg);
            const bool en = shift_enabled(tc.value, cfg);
            if (en && !in_window) {
                ++runs;
                if (first == 0) first = t;
            }
            if (en) ++tc.enabled_cycles;
            in_window = en;
        }
        CHECK(first == first_enabled_cycle(d, cfg));
        CHECK(runs == 1);
        CHECK(tc.enabled_cycles == cfg.n_b);
    }
}

TEST_CASE("enable ordering: smaller distance starts earlier by the difference") {
    const ShiftMacConfig cfg{8, 8, 0, true};
    for (int di = -7; di <= 7; ++di)
        for (int dj = di + 1; dj <= 7; ++dj)
            CHECK(first_enabled_cycle(dj, cfg) - first_enabled_cycle(di, cfg) == dj - di);
}

TEST_CASE("the worked power-of-two filter identity") {
    // I (x) W with W = (2^-2, 2^0, 2^3) -> (I0 >> 2) + I1 + (I2 << 3)
    const ShiftMacConfig cfg{8, 9, 0, true};
    Ledger led = make_ledger();
    const int64_t acts[] = {93, -41, 7};
    const int dists[] = {-2, 0, 3};
    const int64_t got = shift_mac(acts, dists, cfg, led);
    CHECK(got == oracle_floor_shift(93, -2) + (-41) + oracle_floor_shift(7, 3));
    CHECK(got == (93 >> 2) + (-41) + (7 << 3));
}

TEST_CASE("worked signed shift examples") {
    const ShiftMacConfig cfg{8, 4, 0, true};
    Ledger led = make_ledger();
    {
        const int64_t acts[] = {-3};
        const int dists[] = {2};
        CHECK(shift_mac(acts, dists, cfg, led) == -12); // "11110100"
    }
    {
        const int64_t acts[] = {-4};
        const int dists[] = {-1};
        CHECK(shift_mac(acts, dists, cfg, led) == -2); // "11111110"
    }
}

TEST_CASE("all-zero distances reduce to a plain sum") {
    const ShiftMacConfig cfg{8, 8, 0, true};
    Ledger led = make_ledger();
    const int64_t acts[] = {5, -3, 17, 100};
    const int dists[] = {0, 0, 0, 0};
    CHECK(shift_mac(acts, dists, cfg, led) == 119);
}

TEST_CASE("random vectors match the floor-shift oracle") {
    std::mt19937_64 g(29);
    for (int trial = 0; trial < 3000; ++trial) {
        const int n_b = (trial % 2) ? 4 : 8;
        const int d_max = 8;
        const ShiftMacConfig cfg{n_b, d_max, 0, true};
        const int k = 1 + static_cast<int>(g() % 16);
        std::vector<ShiftTerm> terms(static_cast<size_t>(k));
        int64_t expect = 0;
        for (auto& t : terms) {
            const int64_t lim = int64_t{1} << (n_b - 1);
            t.activation = static_cast<int64_t>(g() % (2 * static_cast<uint64_t>(lim))) - lim;
            t.distance = static_cast<int>(g() % 15) - 7;
            t.negate = (g() & 1) != 0;
            const int64_t v = oracle_floor_shift(t.activation, t.distance);
            expect += t.negate ? -v : v;
        }
        Ledger led = make_ledger();
        REQUIRE(shift_mac(terms, cfg, led) == expect);
    }
}

TEST_CASE("pass latency is n_b + 2*max|d| cycles exactly") {
    for (const int n_b : {4, 8}) {
        for (const int d_max : {4, 8, 16}) {
            const ShiftMacConfig cfg{n_b, d_max, 0, true};
            Ledger led = make_ledger();
            const int64_t acts[] = {3, -1};
            const int dists[] = {-(d_max - 1), d_max - 1};
            shift_mac(acts, dists, cfg, led);
            CHECK(led.latency.cycles(Pipeline::ShiftMac) ==
                  static_cast<uint64_t>(n_b) + 2 * static_cast<uint64_t>(d_max - 1));
        }
    }
}

TEST_CASE("access events per activation equal n_b regardless of distance") {
    const int n_b = 8;
    for (const int d : {-7, -3, 0, 3, 7}) {
        const ShiftMacConfig cfg{n_b, 8, 0, false};
        Ledger led = make_ledger();
        const int64_t acts[] = {55};
        const int dists[] = {d};
        shift_mac(acts, dists, cfg, led);
        CHECK(led.energy.count(EnergyEvent::RtRead) == static_cast<uint64_t>(n_b));
        CHECK(led.energy.count(EnergyEvent::RtShift) == static_cast<uint64_t>(n_b));
    }
}

TEST_CASE("sign extension: post-window stream bits equal the MSB") {
    // a negative activation shifted fully right collapses to -1 (all sign bits)
    const ShiftMacConfig cfg{4, 4, 0, true};
    Ledger led = make_ledger();
    const int64_t acts[] = {-8};
    const int dists[] = {-3};
    CHECK(shift_mac(acts, dists, cfg, led) == -1);
}

TEST_CASE("skipped tracks contribute nothing and no events") {
    const ShiftMacConfig cfg{8, 8, 0, false};
    Ledger led = make_ledger();
    const ShiftTerm terms[] = {{120, 3, false, true}};
    CHECK(shift_mac(terms, cfg, led) == 0);
    CHECK(led.energy.total_events() == 0);
}

TEST_CASE("distances outside the supported range are rejected") {
    const ShiftMacConfig cfg{8, 4, 0, true};
    Ledger led = make_ledger();
    const int64_t acts[] = {1};
    const int dists[] = {4};
    CHECK_THROWS_AS(shift_mac(acts, dists, cfg, led), DistanceOutOfRange);
}

TEST_CASE("counter width covers the traversal state count") {
    CHECK(ShiftMacConfig{4, 4, 0, true}.counter_width() == 4);  // the worked example
    CHECK(ShiftMacConfig{4, 8, 0, true}.counter_width() == 5);  // 4 + 16 states
    CHECK(ShiftMacConfig{8, 8, 0, true}.counter_width() == 5);
    CHECK(ShiftMacConfig{16, 16, 0, true}.counter_width() == 6);
}
