#pragma once

#include <string>
#include <vector>

#include "infodesign/harness.hpp"

namespace infodesign {

struct PlantConfig {
    PlantKind kind = PlantKind::Lti;
    Index n = 4;
    Index m = 2;
    double sigma = 0.01;
    std::uint64_t seed = 0;
    Index latent_rank = 6;  //!< lti_highdim only
    double spectral_radius = 0.95;
};

/// Everything a CLI run needs: plant, methods, constraints and solver settings.
struct ExperimentConfig {
    PlantConfig plant;
    std::vector<Method> methods{Method::Sdp, Method::Lp, Method::Multisine, Method::Random, Method::Prbs};
    ExperimentSettings settings;  //!< settings.seed is the master seed
    int seeds = 5;
    std::string output_dir = "out";

    [[nodiscard]] Plant make_plant() const;
};

/// Defaults for a plant with m inputs: box [-1, 1], slew derived from the multisine.
ExperimentConfig default_config(Index m = 2);

/// Strict parse: unknown keys, wrong types and out-of-range values raise ConfigError.
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

/// Fully explicit JSON; parse_config_string(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);
void save_config(const ExperimentConfig& config, const std::string& path);

} // namespace infodesign
