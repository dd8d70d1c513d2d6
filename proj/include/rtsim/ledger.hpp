#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace rtsim {

// Primitive event classes whose counts drive the energy model.
enum class EnergyEvent : int {
    MtjWrite = 0,
    RtShift,
    RtRead,
    FaLogic,
    HaLogic,
    ShiftControl,
    DramBit,
};
inline constexpr int kEnergyEventCount = 7;

std::string_view to_string(EnergyEvent e);

struct EnergyCosts {
    std::array<double, kEnergyEventCount> pj{};

    double& operator[](EnergyEvent e) { return pj[static_cast<int>(e)]; }
    double operator[](EnergyEvent e) const { return pj[static_cast<int>(e)]; }
    bool operator==(const EnergyCosts&) const = default;
};

// Event-count accumulator; total is exactly sum(count * unit cost).
// Merge is commutative and associative, so per-worker ledgers combine
// deterministically.
class EnergyLedger {
public:
    EnergyLedger() = default;
    explicit EnergyLedger(const EnergyCosts& costs) : costs_(costs) {}

    void add(EnergyEvent e, uint64_t n = 1) { counts_[static_cast<int>(e)] += n; }
    uint64_t count(EnergyEvent e) const { return counts_[static_cast<int>(e)]; }
    uint64_t total_events() const;
    double energy_pj(EnergyEvent e) const {
        return static_cast<double>(count(e)) * costs_[e];
    }
    double total_pj() const;
    const EnergyCosts& costs() const { return costs_; }

    void merge(const EnergyLedger& other);

private:
    EnergyCosts costs_{};
    std::array<uint64_t, kEnergyEventCount> counts_{};
};

// Pipelines whose cycle counts are tracked separately. Cycles marked hidden
// were overlapped by the schedule (interleaved position resets, alignment
// under write-back): they cost energy but no wall time.
enum class Pipeline : int {
    DeviceAccess = 0,
    PositionReset,
    SerialAdd,
    BoothGen,
    BoothAlign,
    BoothAccum,
    ShiftMac,
    AdderTree,
    Conv,
    FullyConnected,
    BatchNorm,
    Pool,
};
inline constexpr int kPipelineCount = 12;

std::string_view to_string(Pipeline p);

class LatencyLedger {
public:
    explicit LatencyLedger(double clock_ns = 5.0) : clock_ns_(clock_ns) {}

    void add_cycles(Pipeline p, uint64_t cycles, bool hidden = false) {
        (hidden ? hidden_ : cycles_)[static_cast<int>(p)] += cycles;
    }
    uint64_t cycles(Pipeline p) const { return cycles_[static_cast<int>(p)]; }
    uint64_t hidden_cycles(Pipeline p) const { return hidden_[static_cast<int>(p)]; }
    uint64_t total_cycles() const;
    uint64_t total_hidden_cycles() const;
    double clock_ns() const { return clock_ns_; }
    double wall_ns() const { return static_cast<double>(total_cycles()) * clock_ns_; }

    void merge(const LatencyLedger& other);

    // RAII guard: cycles recorded while alive are reclassified as hidden on
    // exit. The enclosing schedule accounts for wall time itself.
    class HiddenScope {
    public:
        explicit HiddenScope(LatencyLedger& l);
        ~HiddenScope();
        HiddenScope(const HiddenScope&) = delete;
        HiddenScope& operator=(const HiddenScope&) = delete;

    private:
        LatencyLedger& ledger_;
        std::array<uint64_t, kPipelineCount> snapshot_;
    };

private:
    double clock_ns_;
    std::array<uint64_t, kPipelineCount> cycles_{};
    std::array<uint64_t, kPipelineCount> hidden_{};
};

struct Ledger {
    EnergyLedger energy;
    LatencyLedger latency;

    Ledger() = default;
    Ledger(const EnergyCosts& costs, double clock_ns)
        : energy(costs), latency(clock_ns) {}

    void merge(const Ledger& o) {
        energy.merge(o.energy);
        latency.merge(o.latency);
    }
};

} // namespace rtsim
