#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "ked/kernels.hpp"
#include "ked/measures.hpp"

namespace ked {

inline constexpr int kSchemaVersion = 1;

/// A parsed spec file: kernel, measure, optional oracle settings and data path.
/// Relative paths inside the document resolve against `base_dir`.
struct SpecDocument {
  KernelPtr kernel;
  MeasurePtr measure;
  std::optional<std::size_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> data;
  std::filesystem::path base_dir;
};

/// Strict parsing: unknown keys and wrong types throw InvalidArgument naming
/// the offending key.
SpecDocument parse_spec(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
SpecDocument load_spec(const std::filesystem::path& path);

MeasurePtr parse_measure(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
/// Stein kernels take their score from `target`.
KernelPtr parse_kernel(const nlohmann::json& j, const MeasurePtr& target);

/// Points with optional per-point values and weights.
struct DataTable {
  PointSet points;
  std::optional<Vector> values;
  std::optional<Vector> weights;
};

/// CSV with a header of x1..xd and optional y and w columns, or a JSON object
/// {"points": [[...], ...], "values": [...], "weights": [...]}.
DataTable load_data(const std::filesystem::path& path);
DataTable parse_csv(const std::string& text);
DataTable parse_data_json(const nlohmann::json& j);

}  // namespace ked
