#include "opideal/schema_check.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace opideal {

namespace {

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  throw std::invalid_argument("unsupported schema type '" + type + "'");
}

const json& resolve(const json& root, const std::string& ref) {
  if (ref.rfind("#/", 0) != 0) throw std::invalid_argument("only local $ref supported: " + ref);
  return root.at(json::json_pointer(ref.substr(1)));
}

void check(const json& v, const json& schema, const json& root, const std::string& path,
           std::vector<std::string>& errors) {
  if (schema.contains("$ref")) {
    check(v, resolve(root, schema["$ref"].get<std::string>()), root, path, errors);
    return;
  }
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_array()) {
      for (const auto& x : t) ok = ok || has_type(v, x.get<std::string>());
    } else {
      ok = has_type(v, t.get<std::string>());
    }
    if (!ok) {
      errors.push_back(path + ": expected type " + t.dump());
      return;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& x : schema["enum"]) ok = ok || x == v;
    if (!ok) errors.push_back(path + ": value " + v.dump() + " not in enum");
  }
  if (schema.contains("minimum") && v.is_number() && v.get<double>() < schema["minimum"].get<double>())
    errors.push_back(path + ": below minimum");
  if (v.is_object()) {
    if (schema.contains("required"))
      for (const auto& k : schema["required"])
        if (!v.contains(k.get<std::string>()))
          errors.push_back(path + ": missing required '" + k.get<std::string>() + "'");
    const json props = schema.value("properties", json::object());
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string sub = path + "/" + it.key();
      if (props.contains(it.key())) {
        check(it.value(), props[it.key()], root, sub, errors);
      } else if (schema.contains("additionalProperties")) {
        const json& extra = schema["additionalProperties"];
        if (extra.is_boolean()) {
          if (!extra.get<bool>()) errors.push_back(sub + ": unexpected property");
        } else {
          check(it.value(), extra, root, sub, errors);
        }
      }
    }
  }
  if (v.is_array() && schema.contains("items"))
    for (std::size_t i = 0; i < v.size(); ++i)
      check(v[i], schema["items"], root, path + "/" + std::to_string(i), errors);
}

}  // namespace

std::vector<std::string> validate_json(const json& document, const json& schema) {
  std::vector<std::string> errors;
  check(document, schema, schema, "", errors);
  return errors;
}

json load_schema(const std::string& file) {
  std::string dir = OPIDEAL_SCHEMA_DIR;
  if (const char* env = std::getenv("OPIDEAL_SCHEMA_DIR")) dir = env;
  std::ifstream in(dir + "/" + file);
  if (!in) throw std::runtime_error("cannot open schema " + dir + "/" + file);
  return json::parse(in);
}

}  // namespace opideal
