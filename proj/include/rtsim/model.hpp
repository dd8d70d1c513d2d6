#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rtsim/system.hpp"

namespace rtsim {

enum class LayerType { Conv, Fc, BatchNorm, AvgPool, MaxPool };

struct ModelLayer {
    LayerType type;
    ConvLayerSpec conv;
    FcLayerSpec fc;
    BnLayerSpec bn;
    PoolLayerSpec pool;
};

struct Model {
    std::string name;
    int in_c = 1, in_h = 1, in_w = 1;
    int act_bits = 8;
    std::vector<ModelLayer> layers;

    uint64_t total_macs() const;
    uint64_t param_count() const;
};

// Structured text (JSON) model description. Layer weights reference tensor
// container files or request seeded random codes; shapes propagate from the
// input through the layer list. Nonzero overrides replace the description's
// activation width and shift range before weights are materialized.
Model load_model(const std::filesystem::path& path, uint64_t seed, int bits_override = 0,
                 int dmax_override = 0);

// Programmatic builders used by the CLI's bundled models and the test
// workloads.
Model build_lenet5(int act_bits, bool log_weights, int d_max, uint64_t seed);

struct InferenceResult {
    std::vector<int64_t> logits;
    uint64_t macs = 0;
};

// Runs the layer list in order. With verify set, every layer is also run
// through the plain integer oracle and any mismatch aborts with VerifyError.
InferenceResult run_inference(const Model& model, const std::vector<int64_t>& input,
                              SimContext& ctx, bool verify = false);

// Deterministic input generation for seeded experiments.
std::vector<int64_t> random_activations(int count, int act_bits, uint64_t seed);

struct ModelSummary;

// Per-layer byte summary feeding the analytic DRAM model.
ModelSummary summarize_model(const Model& model);

} // namespace rtsim
