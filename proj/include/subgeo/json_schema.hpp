// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace subgeo::schema {

/// Validates a document against the JSON-schema subset used by the shipped
/// schemas: type (string or list), properties, required,
/// additionalProperties (boolean), items, enum, minimum. Returns one message
/// per violation, each prefixed with a JSON-pointer-style path.
std::vector<std::string> validate(const nlohmann::json& document, const nlohmann::json& schema);

} // namespace subgeo::schema
