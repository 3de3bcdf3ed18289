#pragma once

#include <string>

namespace ptag {

/// Shortest decimal that round-trips to the same double (at most 17
/// significant digits).  Non-finite values print as "inf", "-inf", "nan".
std::string format_number(double value);

}  // namespace ptag
