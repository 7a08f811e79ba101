#include "cfdiff/io/checkpoint.hpp"

#include <fstream>

#include "cfdiff/error.hpp"
#include "cfdiff/io/binio.hpp"

namespace cfdiff::io {

namespace {
constexpr char kMagic[8] = {'C', 'F', 'D', 'M', 'C', 'K', 'P', 'T'};

std::string shape_str(const std::vector<std::uint64_t>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}
}  // namespace

const Checkpoint::Entry* Checkpoint::find(const std::string& path) const {
    for (const auto& e : entries)
        if (e.path == path) return &e;
    return nullptr;
}

const Checkpoint::Buffer* Checkpoint::find_buffer(const std::string& path) const {
    for (const auto& b : buffers)
        if (b.path == path) return &b;
    return nullptr;
}

void capture_parameters(const nn::ParameterSet& params, Checkpoint& ckpt) {
    ckpt.entries.clear();
    ckpt.entries.reserve(params.all().size());
    for (const auto& p : params.all()) {
        Checkpoint::Entry e;
        e.path = p->path;
        for (auto d : p->tensor.shape()) e.shape.push_back(d);
        const auto v = p->tensor.data();
        e.values.assign(v.begin(), v.end());
        e.accumulator = p->rmsprop_acc;
        ckpt.entries.push_back(std::move(e));
    }
}

void restore_parameters(const Checkpoint& ckpt, nn::ParameterSet& params) {
    if (ckpt.entries.size() != params.all().size())
        throw ConfigError("checkpoint holds " + std::to_string(ckpt.entries.size()) +
                          " parameters but the model has " +
                          std::to_string(params.all().size()));
    for (std::size_t i = 0; i < ckpt.entries.size(); ++i) {
        const auto& e = ckpt.entries[i];
        auto& p = *params.all()[i];
        if (e.path != p.path)
            throw ConfigError("checkpoint parameter '" + e.path +
                              "' does not match model parameter '" + p.path + "'");
        std::vector<std::uint64_t> model_shape;
        for (auto d : p.tensor.shape()) model_shape.push_back(d);
        if (e.shape != model_shape)
            throw ConfigError("parameter '" + e.path + "': checkpoint shape " +
                              shape_str(e.shape) + " does not match model shape " +
                              shape_str(model_shape));
        if (e.values.size() != p.tensor.size() || e.accumulator.size() != p.tensor.size())
            throw ConfigError("parameter '" + e.path + "': payload size mismatch");
        std::copy(e.values.begin(), e.values.end(), p.tensor.mutable_data().begin());
        p.rmsprop_acc = e.accumulator;
    }
}

void capture_buffer(Checkpoint& ckpt, const std::string& path,
                    const std::vector<double>& values) {
    ckpt.buffers.push_back({path, values});
}

void restore_buffer(const Checkpoint& ckpt, const std::string& path, std::vector<double>& out) {
    const auto* b = ckpt.find_buffer(path);
    if (!b) throw ConfigError("checkpoint is missing buffer '" + path + "'");
    if (b->values.size() != out.size())
        throw ConfigError("buffer '" + path + "': checkpoint has " +
                          std::to_string(b->values.size()) + " values, model expects " +
                          std::to_string(out.size()));
    out = b->values;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint '" + path + "'");
    os.write(kMagic, sizeof kMagic);
    write_u32(os, ckpt.format_version);
    write_string(os, ckpt.config_echo);
    write_f64(os, ckpt.normalization_scale);
    write_f64(os, ckpt.sensing_scale);

    write_f64(os, ckpt.optimizer.learning_rate);
    write_f64(os, ckpt.optimizer.decay_factor);
    write_u32(os, static_cast<std::uint32_t>(ckpt.optimizer.patience));
    write_f64(os, ckpt.optimizer.min_learning_rate);
    write_f64(os, ckpt.optimizer.best_validation_loss);
    write_u32(os, static_cast<std::uint32_t>(ckpt.optimizer.epochs_since_improvement));

    write_u64(os, ckpt.entries.size());
    for (const auto& e : ckpt.entries) {
        write_string(os, e.path);
        write_shape(os, e.shape);
        for (double v : e.values) write_f64(os, v);
        for (double v : e.accumulator) write_f64(os, v);
    }
    write_u64(os, ckpt.buffers.size());
    for (const auto& b : ckpt.buffers) {
        write_string(os, b.path);
        write_u64(os, b.values.size());
        for (double v : b.values) write_f64(os, v);
    }
    if (!os) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || !std::equal(magic, magic + 8, kMagic))
        throw IoError("checkpoint '" + path + "': bad magic");

    Checkpoint ckpt;
    ckpt.format_version = read_u32(is);
    if (ckpt.format_version != 1)
        throw IoError("checkpoint '" + path + "': unsupported format version " +
                      std::to_string(ckpt.format_version));
    ckpt.config_echo = read_string(is);
    ckpt.normalization_scale = read_f64(is);
    ckpt.sensing_scale = read_f64(is);

    ckpt.optimizer.learning_rate = read_f64(is);
    ckpt.optimizer.decay_factor = read_f64(is);
    ckpt.optimizer.patience = static_cast<int>(read_u32(is));
    ckpt.optimizer.min_learning_rate = read_f64(is);
    ckpt.optimizer.best_validation_loss = read_f64(is);
    ckpt.optimizer.epochs_since_improvement = static_cast<int>(read_u32(is));

    const std::uint64_t n_entries = read_u64(is);
    ckpt.entries.reserve(n_entries);
    for (std::uint64_t i = 0; i < n_entries; ++i) {
        Checkpoint::Entry e;
        e.path = read_string(is);
        e.shape = read_shape(is);
        const std::uint64_t n = shape_numel(e.shape);
        e.values.resize(n);
        for (auto& v : e.values) v = read_f64(is);
        e.accumulator.resize(n);
        for (auto& v : e.accumulator) v = read_f64(is);
        ckpt.entries.push_back(std::move(e));
    }
    const std::uint64_t n_buffers = read_u64(is);
    ckpt.buffers.reserve(n_buffers);
    for (std::uint64_t i = 0; i < n_buffers; ++i) {
        Checkpoint::Buffer b;
        b.path = read_string(is);
        const std::uint64_t n = read_u64(is);
        if (n > (1ULL << 32)) throw IoError("checkpoint '" + path + "': implausible buffer size");
        b.values.resize(n);
        for (auto& v : b.values) v = read_f64(is);
        ckpt.buffers.push_back(std::move(b));
    }
    return ckpt;
}

}  // namespace cfdiff::io
