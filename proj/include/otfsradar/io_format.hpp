// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <charconv>
#include <string>

namespace otfsradar {

/// Shortest round-trip decimal representation, used everywhere a float is
/// written to CSV/JSON text so reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace otfsradar
