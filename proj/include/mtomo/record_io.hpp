#pragma once

#include <string>
#include <string_view>

#include "mtomo/maxent.hpp"

namespace mtomo::maxent {

/// Keys: n, k, x11, re_x1k, im_x1k, xkk (optional). `im_x1k` defaults to 0.
MeasurementRecord parse_record(std::string_view text);
std::string format_record(const MeasurementRecord& r);

}  // namespace mtomo::maxent
