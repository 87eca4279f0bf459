#pragma once

// Private: JSON mapping of plan requests, shared by plan files and experiment configs.

#include <string_view>

#include "caos/plan.hpp"
#include "json_util.hpp"

namespace caos::detail {

Json request_to_json(const PlanRequest& request);
PixelGrid grid_from_json(const Json& grid, std::string_view text);
/// With allow_derived the plan-file-only fields (schema, W, J, F) are accepted.
PlanRequest request_from_json(const Json& j, std::string_view text, bool allow_derived);

}  // namespace caos::detail
