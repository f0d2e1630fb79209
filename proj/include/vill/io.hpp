#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "vill/config.hpp"
#include "vill/data.hpp"
#include "vill/harness.hpp"
#include "vill/metrics.hpp"
#include "vill/nn.hpp"

namespace vill {

// JSON documents written to run directories. Metrics documents contain no
// timestamps, so identical runs serialise to identical bytes.
nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ShiftSpec& spec);
ShiftSpec shift_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AblationResult& result);

// Per-epoch CSV: epoch, loss components, pseudo counts, v_i, omega_i.
void write_epoch_csv(std::ostream& out, const RunRecord& record);

// Indented JSON with a trailing newline.
std::string dump(const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// Aligned terminal tables.
void print_metrics_table(std::ostream& out, const MetricsReport& report);
void print_ablation_table(std::ostream& out, const AblationResult& result);
// Same table from a serialised ablation document.
void print_ablation_table(std::ostream& out, const nlohmann::json& ablation);

}  // namespace vill
