#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfdiff/nn/layers.hpp"
#include "cfdiff/nn/optimizer.hpp"

namespace cfdiff::io {

// Self-describing model container. Parameters are stored in registration
// order as (path, shape, f64 little-endian values) plus their optimizer
// accumulators, followed by optimizer state, normalization metadata, and the
// originating configuration echoed as config text. Writing is fully
// deterministic, so identical seeds/configs give byte-identical files.
struct Checkpoint {
    std::uint32_t format_version = 1;
    std::string config_echo;           // scenario + ranges + model + train keys
    double normalization_scale = 1.0;
    double sensing_scale = 1.0;
    nn::OptimizerState optimizer;

    struct Entry {
        std::string path;
        std::vector<std::uint64_t> shape;
        std::vector<double> values;
        std::vector<double> accumulator;  // rmsprop mean-square state
    };
    std::vector<Entry> entries;

    // Non-trainable state (batchnorm running statistics), keyed like params.
    struct Buffer {
        std::string path;
        std::vector<double> values;
    };
    std::vector<Buffer> buffers;

    const Entry* find(const std::string& path) const;
    const Buffer* find_buffer(const std::string& path) const;
};

// Snapshot every parameter (and accumulator) in registration order.
void capture_parameters(const nn::ParameterSet& params, Checkpoint& ckpt);
// Restore into an identically-constructed model; mismatched path/shape throws
// ConfigError naming the parameter and both shapes.
void restore_parameters(const Checkpoint& ckpt, nn::ParameterSet& params);

void capture_buffer(Checkpoint& ckpt, const std::string& path,
                    const std::vector<double>& values);
// Throws ConfigError when the buffer is missing or sized differently.
void restore_buffer(const Checkpoint& ckpt, const std::string& path, std::vector<double>& out);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cfdiff::io
