// SPDX-License-Identifier: Apache-2.0
//
// mmloc: mmWave channel sounding, sparse recovery and vehicle localization
// Copyright (C) 2026 mmloc contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MMLOC_TEXTIO_HPP
#define MMLOC_TEXTIO_HPP

#include <cstdio>
#include <istream>
#include <stdexcept>
#include <string>

namespace mmloc
{

// Shortest round-trip decimal for a double; %.17g keeps text fixtures and CSV
// outputs bit-reproducible.
inline std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void expect_token(std::istream &is, const std::string &want)
{
    std::string got;
    if (!(is >> got) || got != want)
        throw std::runtime_error("parse error: expected '" + want + "', got '" + got + "'");
}

inline double read_double(std::istream &is)
{
    double v = 0.0;
    if (!(is >> v))
        throw std::runtime_error("parse error: expected a number");
    return v;
}

inline long read_long(std::istream &is)
{
    long v = 0;
    if (!(is >> v))
        throw std::runtime_error("parse error: expected an integer");
    return v;
}

} // namespace mmloc

#endif
