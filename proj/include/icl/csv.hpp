#pragma once

#include <cstdio>
#include <string>

namespace icl {

// Shortest representation preserving 17 significant digits.
inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace icl
