#pragma once

#include <string>

#include <json.hpp>

namespace flab {

using Json = nlohmann::ordered_json;

/// Pretty-prints `j` with floating values at 17 significant digits.
/// Non-finite numbers are written as null.
std::string dump_json(const Json& j, int indent = 2);

/// %.17g formatting used for every floating value written to disk.
std::string format_double(double v);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace flab
