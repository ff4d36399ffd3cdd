// Copyright 2026 The qsbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsb {

using Index = std::size_t;
using IndexList = std::vector<Index>;

// Error taxonomy. Every failure the toolkit reports is one of these so the
// CLI can map them to a diagnostic and a nonzero exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};
struct SchemaError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct SplitError : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct FitError : Error {
    using Error::Error;
};
struct ProtocolError : Error {
    using Error::Error;
};

/// Order-sensitive FNV-1a digest of an index list. Used as the fit-index
/// fingerprint that every fitted transform records.
std::uint64_t index_hash(std::span<const Index> idx);

/// Hash of the sorted copy of `idx`; insensitive to row order.
std::uint64_t index_set_hash(std::span<const Index> idx);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a task key.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Stable 64-bit digest of a string (FNV-1a).
std::uint64_t string_hash(const std::string& s);

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must not
/// depend on scheduling; each index is handled by exactly one call.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

/// Process-wide default worker count used by parallel kernels.
unsigned default_jobs();
void set_default_jobs(unsigned jobs);

std::string hex64(std::uint64_t v);

}  // namespace qsb
