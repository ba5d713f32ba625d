#pragma once

// A small JSON-schema subset: type, required, properties, items, enum,
// minimum, additionalProperties and local $ref.

#include "opideal/json_io.hpp"

#include <string>
#include <vector>

namespace opideal {

/// Error messages with JSON-pointer-like paths; empty when valid.
std::vector<std::string> validate_json(const json& document, const json& schema);

/// Reads <schema dir>/<file>; the directory is OPIDEAL_SCHEMA_DIR from the
/// environment if set, else the one compiled in.
json load_schema(const std::string& file);

}  // namespace opideal
