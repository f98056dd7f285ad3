#pragma once

#include <json.hpp>

#include "ensweight/metrics.hpp"
#include "ensweight/optimizer.hpp"

namespace ensweight::io::detail {

using Json = nlohmann::ordered_json;

// Non-finite doubles become null.
Json number(double x);

Json metrics_json(const MetricsReport& report);
Json constraints_json(const ConstraintReport& report);
Json objective_json(const ObjectiveBreakdown& objective);
Json params_json(const HyperParams& params);

}  // namespace ensweight::io::detail
