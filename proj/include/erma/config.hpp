#pragma once

#include "erma/data_model.hpp"
#include "erma/erm.hpp"
#include "erma/fixed_point.hpp"
#include "erma/loss.hpp"
#include "erma/regularizer.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace erma {

using Json = nlohmann::json;

struct SweepSpec {
    std::string parameter;  // "lambda" or "phi"
    std::vector<double> grid;
    double phi_scale = 1.0;
};

struct ExperimentConfig {
    Json resolved;  // every field with defaults filled in
    DataModel model;
    LossFamily loss;
    Json regularizer_spec;
    Regularizer reg;
    std::size_t n = 0;
    SolveOptions solve;
    PanelOptions panel;
    RefitOptions refit;
    FitOptions fit;
    int replications = 0;
    std::uint64_t seed = 0;
    std::size_t test_points = 0;
    std::size_t score_points = 0;
    double threshold = 0.0;
    std::optional<SweepSpec> sweep;
    int hist_bins = 60;
    std::string out_dir;
    int threads = 0;

    std::uint64_t panel_seed() const;
    std::uint64_t replication_seed() const;
    std::uint64_t test_seed() const;
    std::uint64_t law_seed() const;
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
};

ExperimentConfig parse_config(const Json& doc, const ConfigOverrides& ov = {},
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path, const ConfigOverrides& ov = {});

// Builds the regularizer described by a JSON object at dimension p; sweeps edit the object first.
Regularizer make_regularizer(const Json& spec, int p, const std::string& where = "regularizer");
Vec parse_vector(const Json& spec, int p, const std::string& where);
Mat parse_matrix(const Json& spec, int p, const std::string& where);

}  // namespace erma
