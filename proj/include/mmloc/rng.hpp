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

#ifndef MMLOC_RNG_HPP
#define MMLOC_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mmloc
{

// splitmix64 step; used only to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t &state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives a child seed from a master seed and a tag path, e.g.
// derive_seed(campaign_seed, {trial_index, substream}). Stable across runs.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags)
{
    std::uint64_t s = master;
    std::uint64_t out = splitmix64(s);
    for (std::uint64_t t : tags)
    {
        s ^= t + 0x9E3779B97F4A7C15ULL + (out << 6) + (out >> 2);
        out = splitmix64(s);
    }
    return out;
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> tags)
{
    return std::mt19937_64(derive_seed(master, tags));
}

} // namespace mmloc

#endif
