#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "phi4/multipoly.hpp"

namespace phi4 {

using json = nlohmann::json;

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixture root: $PHI4_FIXTURES if set, else the directory baked in at build time.
std::filesystem::path fixture_dir();

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

/// {"vars": [...], "den": "4", "terms": [{"e": [...], "c": "-1"}, ...]}
json poly_to_json(const MultiPoly& f, std::span<const std::string> names);
json poly_to_json(const MultiPoly& f);
/// Accepts the term format above or {"vars": [...], "expr": "..."}.
MultiPoly poly_from_json(const json& j);
std::vector<std::string> poly_vars_from_json(const json& j);

}  // namespace phi4
