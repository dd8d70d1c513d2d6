#include <doctest.h>

#include "rtsim/cost_model.hpp"
#include "rtsim/ledger.hpp"

using namespace rtsim;

namespace {
EnergyCosts test_costs() {
    return make_energy_costs(DeviceParams{}, AdderEnergyModel{}, CostParams{});
}
} // namespace

TEST_CASE("energy totals are exact count-times-unit sums") {
    EnergyLedger l(test_costs());
    l.add(EnergyEvent::MtjWrite, 3);
    l.add(EnergyEvent::RtShift, 10);
    l.add(EnergyEvent::FaLogic, 2);
    CHECK(l.total_pj() == doctest::Approx(3 * 1.0 + 10 * 0.051 + 2 * 0.019).epsilon(1e-12));
    CHECK(l.count(EnergyEvent::MtjWrite) == 3);
    CHECK(l.total_events() == 15);
}

TEST_CASE("ledger linearity: concatenated sequences equal the sum of parts") {
    EnergyLedger a(test_costs());
    EnergyLedger b(test_costs());
    EnergyLedger both(test_costs());
    a.add(EnergyEvent::MtjWrite, 7);
    a.add(EnergyEvent::RtShift, 2);
    b.add(EnergyEvent::RtShift, 5);
    b.add(EnergyEvent::DramBit, 64);
    both.add(EnergyEvent::MtjWrite, 7);
    both.add(EnergyEvent::RtShift, 7);
    both.add(EnergyEvent::DramBit, 64);
    CHECK(a.total_pj() + b.total_pj() == doctest::Approx(both.total_pj()).epsilon(1e-12));
}

TEST_CASE("merge is commutative") {
    EnergyLedger a(test_costs());
    EnergyLedger b(test_costs());
    a.add(EnergyEvent::MtjWrite, 4);
    b.add(EnergyEvent::RtRead, 9);
    EnergyLedger ab = a;
    ab.merge(b);
    EnergyLedger ba = b;
    ba.merge(a);
    for (int i = 0; i < kEnergyEventCount; ++i) {
        const auto e = static_cast<EnergyEvent>(i);
        CHECK(ab.count(e) == ba.count(e));
    }
}

TEST_CASE("latency ledger separates hidden cycles from wall time") {
    LatencyLedger lat(5.0);
    lat.add_cycles(Pipeline::DeviceAccess, 8);
    lat.add_cycles(Pipeline::PositionReset, 8, true);
    CHECK(lat.total_cycles() == 8);
    CHECK(lat.total_hidden_cycles() == 8);
    CHECK(lat.wall_ns() == doctest::Approx(40.0));

    {
        LatencyLedger::HiddenScope hs(lat);
        lat.add_cycles(Pipeline::SerialAdd, 32);
    }
    CHECK(lat.total_cycles() == 8);
    CHECK(lat.hidden_cycles(Pipeline::SerialAdd) == 32);
}
