// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace chartsurf {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public Error {
  public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

namespace detail {
[[noreturn]] inline void throw_check_failure(const char* expr, const std::string& msg) {
    std::ostringstream os;
    os << "check failed: " << expr;
    if (!msg.empty()) os << " (" << msg << ")";
    throw Error(os.str());
}
}  // namespace detail

#define CHARTSURF_CHECK(expr)                                            \
    do {                                                                 \
        if (!(expr)) ::chartsurf::detail::throw_check_failure(#expr, ""); \
    } while (0)

#define CHARTSURF_CHECK_MSG(expr, msg)                                  \
    do {                                                                \
        if (!(expr)) {                                                  \
            std::ostringstream os__;                                    \
            os__ << msg;                                                \
            ::chartsurf::detail::throw_check_failure(#expr, os__.str()); \
        }                                                               \
    } while (0)

}  // namespace chartsurf
