// SPDX-License-Identifier: Apache-2.0
//
// otfs-radar: delay-Doppler MIMO radar simulation and estimation toolkit.

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace otfsradar {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

/// Dense row-major complex matrix. Storage is contiguous, so a row can be
/// handed to the vector kernels as a span without copying.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    Complex* data() { return data_.data(); }
    const Complex* data() const { return data_.data(); }

    std::span<Complex> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const Complex> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<Complex> flat() { return {data_.data(), data_.size()}; }
    std::span<const Complex> flat() const { return {data_.data(), data_.size()}; }

    bool operator==(const CMatrix&) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    CVec data_;
};

// ---------------------------------------------------------------------------
// Error types. One class per failure kind so callers (and the CLI exit-code
// mapping) can dispatch on type.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario/config validation failure. Carries every violated invariant,
/// not just the first one found.
class InvalidConfig : public Error {
public:
    explicit InvalidConfig(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& x : v) s += "\n  - " + x;
        return s;
    }
    std::vector<std::string> violations_;
};

class UnsupportedConstellation : public Error {
public:
    using Error::Error;
};
class LengthMismatch : public Error {
public:
    using Error::Error;
};
class AngleOutOfRange : public Error {
public:
    using Error::Error;
};
class DelayOutOfFrame : public Error {
public:
    using Error::Error;
};
class EigenFailure : public Error {
public:
    using Error::Error;
};
class SubspaceDegenerate : public Error {
public:
    using Error::Error;
};
class RootFindingFailure : public Error {
public:
    using Error::Error;
};
class InsufficientRoots : public Error {
public:
    using Error::Error;
};
class SingularSystem : public Error {
public:
    using Error::Error;
};
class ZeroFilterOutput : public Error {
public:
    using Error::Error;
};
class SingularFisher : public Error {
public:
    using Error::Error;
};
class StepUnderflow : public Error {
public:
    using Error::Error;
};
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace otfsradar
