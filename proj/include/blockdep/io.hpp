#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "blockdep/design.hpp"
#include "blockdep/distributions.hpp"
#include "blockdep/harness.hpp"
#include "blockdep/losses.hpp"
#include "blockdep/partition.hpp"
#include "blockdep/statepoint.hpp"

namespace blockdep::io {

using Json = nlohmann::ordered_json;

// Parsers throw ValidationError with the offending key on malformed input.
// Serialized partitions are 1-based; everything internal stays 0-based.
Partition partition_from_json(const Json& j);
Json partition_to_json(const Partition& partition);

LossKind loss_from_json(const Json& j);
Json loss_to_json(const LossKind& loss);

NoiseSpec noise_from_json(const Json& j);
Json noise_to_json(const NoiseSpec& noise);

Theta0Spec theta0_from_json(const Json& j);
Json theta0_to_json(const Theta0Spec& spec);

CovarianceSpec covariance_from_json(const Json& j);
DesignSpec design_from_json(const Json& j);
Json design_to_json(const DesignSpec& spec);

StateEvolutionInput state_input_from_json(const Json& j);
ExperimentConfig experiment_from_json(const Json& j);

Json load_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// result.json floats are serialized by the shortest round-trip rule, so a
/// rerun with the same seed is byte-identical.
void write_result(const std::filesystem::path& out_dir, const Json& result);

/// One row per record; floats rendered with 17 significant digits.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);  // %.17g

/// Row-major float64 dump with a JSON sidecar {n, p, family, seed}.
void dump_matrix(const std::filesystem::path& bin_path, const Matrix& m,
                 const Json& sidecar);
Matrix load_matrix(const std::filesystem::path& bin_path, std::size_t rows,
                   std::size_t cols);

}  // namespace blockdep::io
