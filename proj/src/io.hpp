#pragma once

#include <string>

#include <json.hpp>

#include "grid.hpp"
#include "parabolic.hpp"

namespace fbci {

// x,t,value per node, rows ordered by t then x, %.17g
void write_field_csv(const std::string& path, const Field& f);
// grid inferred from the distinct x and t values; IoError on malformed or truncated files
Field read_field_csv(const std::string& path, const std::string& name);

// cell-centred values (one per cell) in the same layout
void write_cell_csv(const std::string& path, const Grid& g, const std::vector<double>& values);

nlohmann::json mask_to_json(const CellMask& m);
CellMask mask_from_json(const nlohmann::json& j);

nlohmann::json base_to_json(const BaseSubsolution& b);
BaseSubsolution base_from_json(const nlohmann::json& j);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

void ensure_dir(const std::string& dir);

}  // namespace fbci
