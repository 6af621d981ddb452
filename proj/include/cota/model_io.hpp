#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "cota/scm.hpp"

namespace cota {

struct ModelFile {
    std::shared_ptr<const DiscreteScm> scm;
    InterventionPoset interventions;
    std::optional<OmegaMap> omega;  // indices into this file's interventions and the partner file's
};

// Errors carry "<file>:<line>: <message>".
ModelFile parse_model(const std::string& text, const std::string& source = "<model>");
ModelFile load_model(const std::filesystem::path& path);

std::string dump_model(const DiscreteScm& scm, const InterventionPoset& interventions,
                       const std::optional<OmegaMap>& omega = std::nullopt);
void save_model(const std::filesystem::path& path, const DiscreteScm& scm, const InterventionPoset& interventions,
                const std::optional<OmegaMap>& omega = std::nullopt);

}  // namespace cota
