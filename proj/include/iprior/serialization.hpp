#pragma once

#include "iprior/baselines.hpp"
#include "iprior/estimation.hpp"
#include "iprior/iprior_core.hpp"

#include <json.hpp>

#include <string>

namespace iprior {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;

Json to_json(const Metric& metric);
Metric metric_from_json(const Json& j);
Json to_json(const Kernel& kernel);
Kernel kernel_from_json(const Json& j);
Json to_json(const ErrorModel& error);
ErrorModel error_model_from_json(const Json& j);
/// Function-valued prior means cannot be stored and throw ValidationError.
Json to_json(const PriorMean& f0);
PriorMean prior_mean_from_json(const Json& j);

/// Versioned document with everything needed to predict.
Json model_to_json(const IPriorModel& model);
IPriorModel model_from_json(const Json& j);

Json to_json(const LocalMaximum& m);
Json to_json(const MlFit& fit);
Json to_json(const CvSelection& cv);
Json to_json(const FitReport& report);
Json to_json(const HyperSelection& sel);
Json to_json(const SeFit& fit);

}  // namespace iprior
