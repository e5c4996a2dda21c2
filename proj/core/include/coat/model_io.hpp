#pragma once

// JSON documents for fitted models ("coat-model/1") and two-sample
// Bland-Altman test results ("coat-batest/1").

#include <string>
#include <string_view>

#include "coat/agreement.hpp"
#include "coat/partition.hpp"

namespace coat {

inline constexpr const char* kModelSchema = "coat-model/1";
inline constexpr const char* kBaTestSchema = "coat-batest/1";

/// Pretty-printed JSON. Non-finite numbers are written as null.
std::string model_to_json(const CoatModel& model);

/// Inverse of model_to_json; node membership vectors are not stored.
CoatModel model_from_json(std::string_view text);

std::string batest_to_json(const BaTestResult& result, double alpha);

}  // namespace coat
