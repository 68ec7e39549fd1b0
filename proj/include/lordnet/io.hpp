#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lordnet/field.hpp"
#include "lordnet/model.hpp"

namespace lordnet::io {

// LDNF binary field file, all integers little-endian regardless of host:
//   magic "LDNF" | u32 version=1 | u32 ndim | u32 dims[ndim] | f64 payload,
// payload row-major, 8*product(dims) bytes. Write-then-read round trips are
// bit-identical.
void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

// Checkpoint directory: manifest.json naming every parameter (name, shape,
// file) plus caller-supplied config, and one LDNF file per parameter.
void save_checkpoint(const std::string& dir, const ParamSet& params, const nlohmann::json& config);
// Loads into an existing parameter set; names and shapes must match.
nlohmann::json load_checkpoint(const std::string& dir, ParamSet& params);

// 8-bit grayscale heatmap of a 2D field (P2 ascii or P5 binary), min-max
// normalized; the normalization is recorded in a <path>.json sidecar.
void write_pgm(const std::string& path, const Field& f, bool binary);

// Full-precision CSV dump of a 2D field and its inverse.
void write_csv(const std::string& path, const Field& f);
Field read_csv_field(const std::string& path);

struct CurvePoint {
    int iter;
    double lr;
    double loss;
};
void write_loss_curve(const std::string& path, const std::vector<CurvePoint>& curve);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// Strict-key helper: rejects keys outside `allowed` with the offending path.
void require_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                  const std::string& where);

}  // namespace lordnet::io
