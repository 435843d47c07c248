#pragma once

// Internal: shared JSON (de)serialization between tree and ensemble models.

#include <json.hpp>

#include "fairfis/tree.hpp"

namespace fairfis {

nlohmann::ordered_json tree_to_json_obj(const Tree& t);
Tree tree_from_json_obj(const nlohmann::ordered_json& j);

}  // namespace fairfis
