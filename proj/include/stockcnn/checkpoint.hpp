#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "stockcnn/model.hpp"
#include "stockcnn/optim.hpp"

namespace stockcnn {

struct Checkpoint {
    Model model;
    std::optional<AdamState> optimizer;
};

// Binary layout: "STKCNNCK" magic, u32 version, model config, then every
// parameter array as (name, rank, dims, raw f64 values), then an optional
// optimizer section. Round trips are bit-exact.
void write_checkpoint(std::ostream& out, const Model& model, const AdamState* optimizer = nullptr);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const AdamState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stockcnn
