#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lir {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel_of(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream oss;
    oss << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) oss << ",";
        oss << shape[i];
    }
    oss << ")";
    return oss.str();
}

}  // namespace lir

// Contract checks; violations throw with the offending values in the message.
#define LIR_CHECK(cond, msg)                          \
    do {                                              \
        if (!(cond)) {                                \
            std::ostringstream lir_oss_;              \
            lir_oss_ << msg;                          \
            throw std::invalid_argument(lir_oss_.str()); \
        }                                             \
    } while (0)
