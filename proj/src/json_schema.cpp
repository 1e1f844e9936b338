// SPDX-License-Identifier: Apache-2.0
#include "subgeo/json_schema.hpp"

namespace subgeo::schema {

namespace {

using nlohmann::json;

bool type_matches(const json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "number") return value.is_number();
    if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    return false;
}

void check(const json& value, const json& schema, const std::string& path,
           std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(value, t.get<std::string>());
        } else if (t.is_array()) {
            for (const auto& option : t) ok = ok || type_matches(value, option.get<std::string>());
        }
        if (!ok) {
            errors.push_back(path + ": expected type " + t.dump() + ", got " +
                             std::string(value.type_name()));
            return;
        }
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& option : schema["enum"]) ok = ok || option == value;
        if (!ok) errors.push_back(path + ": value " + value.dump() + " not in enum");
    }
    if (schema.contains("minimum") && value.is_number()) {
        if (value.get<double>() < schema["minimum"].get<double>()) {
            errors.push_back(path + ": value below minimum " + schema["minimum"].dump());
        }
    }
    if (value.is_object()) {
        const json props = schema.value("properties", json::object());
        if (schema.contains("required")) {
            for (const auto& key : schema["required"]) {
                if (!value.contains(key.get<std::string>())) {
                    errors.push_back(path + ": missing required key '" + key.get<std::string>() + "'");
                }
            }
        }
        const bool allow_extra = schema.value("additionalProperties", true);
        for (const auto& [key, sub] : value.items()) {
            if (props.contains(key)) {
                check(sub, props[key], path + "/" + key, errors);
            } else if (!allow_extra) {
                errors.push_back(path + ": unknown key '" + key + "'");
            }
        }
    }
    if (value.is_array() && schema.contains("items")) {
        int index = 0;
        for (const auto& item : value) {
            check(item, schema["items"], path + "/" + std::to_string(index), errors);
            ++index;
        }
    }
}

} // namespace

std::vector<std::string> validate(const nlohmann::json& document, const nlohmann::json& schema) {
    std::vector<std::string> errors;
    check(document, schema, "", errors);
    return errors;
}

} // namespace subgeo::schema
