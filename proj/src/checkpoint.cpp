#include "stockcnn/checkpoint.hpp"

#include <fstream>

#include "io_util.hpp"

namespace stockcnn {

namespace {

constexpr std::string_view kMagic = "STKCNNCK";
constexpr std::uint32_t kVersion = 1;

void put_activation(detail::BinaryWriter& w, const Activation& act) {
    w.put(static_cast<std::uint8_t>(act.kind));
    w.put(act.slope);
}

Activation get_activation(detail::BinaryReader& r) {
    auto kind = r.get<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(Activation::Kind::Identity)) {
        throw Error("io.corrupt", "checkpoint: unknown activation kind");
    }
    Activation act;
    act.kind = static_cast<Activation::Kind>(kind);
    act.slope = r.get<double>();
    return act;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Model& model, const AdamState* optimizer) {
    detail::BinaryWriter w(out);
    const auto& cfg = model.config();
    w.put_bytes(kMagic);
    w.put(kVersion);
    w.put(static_cast<std::uint64_t>(cfg.input_channels));
    w.put(static_cast<std::uint64_t>(cfg.window_len));
    w.put(static_cast<std::uint64_t>(cfg.pool_size));
    w.put(static_cast<std::uint32_t>(cfg.conv.size()));
    for (const auto& spec : cfg.conv) {
        w.put(static_cast<std::uint64_t>(spec.filters));
        w.put(static_cast<std::uint64_t>(spec.kernel_size));
        put_activation(w, spec.activation);
        w.put(static_cast<std::uint8_t>(spec.pool_after));
    }
    w.put(static_cast<std::uint32_t>(cfg.dense.size()));
    for (const auto& spec : cfg.dense) {
        w.put(static_cast<std::uint64_t>(spec.units));
        put_activation(w, spec.activation);
        w.put(spec.dropout);
    }

    auto params = model.parameters();
    w.put(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        w.put_string(p.name);
        w.put(static_cast<std::uint32_t>(p.shape.size()));
        for (auto d : p.shape) w.put(static_cast<std::uint64_t>(d));
        w.put_doubles(p.values);
    }

    w.put(static_cast<std::uint8_t>(optimizer != nullptr));
    if (optimizer != nullptr) {
        if (optimizer->m.size() != params.size() || optimizer->s.size() != params.size()) {
            throw Error("optim.shape_mismatch", "optimizer state does not mirror the model");
        }
        w.put(optimizer->step);
        for (std::size_t b = 0; b < params.size(); ++b) {
            if (optimizer->m[b].size() != params[b].values.size() ||
                optimizer->s[b].size() != params[b].values.size()) {
                throw Error("optim.shape_mismatch", "optimizer block " + params[b].name + " differs in size");
            }
            w.put_doubles(optimizer->m[b]);
            w.put_doubles(optimizer->s[b]);
        }
    }
    w.finish("checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
    detail::BinaryReader r(in, "checkpoint");
    r.expect_magic(kMagic, kVersion);

    ModelConfig cfg;
    cfg.input_channels = r.get<std::uint64_t>();
    cfg.window_len = r.get<std::uint64_t>();
    cfg.pool_size = r.get<std::uint64_t>();
    auto n_conv = r.get<std::uint32_t>();
    if (n_conv > 64) throw Error("io.corrupt", "checkpoint: implausible layer count");
    for (std::uint32_t i = 0; i < n_conv; ++i) {
        ConvSpec spec;
        spec.filters = r.get<std::uint64_t>();
        spec.kernel_size = r.get<std::uint64_t>();
        spec.activation = get_activation(r);
        spec.pool_after = r.get<std::uint8_t>() != 0;
        cfg.conv.push_back(spec);
    }
    auto n_dense = r.get<std::uint32_t>();
    if (n_dense > 64) throw Error("io.corrupt", "checkpoint: implausible layer count");
    for (std::uint32_t j = 0; j < n_dense; ++j) {
        DenseSpec spec;
        spec.units = r.get<std::uint64_t>();
        spec.activation = get_activation(r);
        spec.dropout = r.get<double>();
        cfg.dense.push_back(spec);
    }

    Checkpoint ckpt{Model(cfg), std::nullopt};
    auto params = ckpt.model.parameters();
    auto count = r.get<std::uint32_t>();
    if (count != params.size()) throw Error("io.corrupt", "checkpoint: parameter count does not match config");
    for (auto& p : params) {
        auto name = r.get_string();
        auto rank = r.get<std::uint32_t>();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = r.get<std::uint64_t>();
        if (name != p.name || shape != p.shape) {
            throw Error("io.corrupt", "checkpoint: array '" + name + "' does not match expected '" + p.name + "'");
        }
        r.get_doubles(p.values);
    }

    if (r.get<std::uint8_t>() != 0) {
        std::vector<std::size_t> sizes;
        for (const auto& p : params) sizes.push_back(p.values.size());
        AdamState state = AdamState::zeros(sizes);
        state.step = r.get<std::uint64_t>();
        for (std::size_t b = 0; b < params.size(); ++b) {
            r.get_doubles(state.m[b]);
            r.get_doubles(state.s[b]);
        }
        ckpt.optimizer = std::move(state);
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const AdamState* optimizer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io.unwritable", "cannot open " + path.string() + " for writing");
    write_checkpoint(out, model, optimizer);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io.unreadable", "cannot open " + path.string());
    return read_checkpoint(in);
}

}  // namespace stockcnn
