/*
 * Copyright 2026 The hjmm-riesz Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace hjmm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A curve's grid does not cover the interval an operation needs.
class DomainTooShort : public Error {
public:
    using Error::Error;
};

/// Two curves live on different grids and resampling was not requested.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// Second-derivative quadrature did not settle under grid refinement.
class NotSmoothEnough : public Error {
public:
    using Error::Error;
};

/// Explicit Euler step violates |1 + lambda_n dt| < 1 for some kept mode.
class UnstableStep : public Error {
public:
    using Error::Error;
};

/// Delivery window ordering t <= T1 < T2 <= T violated.
class BadWindow : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or configuration input.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A coefficient field broke its declared Lipschitz, growth or structure contract.
class ContractViolation : public Error {
public:
    using Error::Error;
};

#define HJMM_REQUIRE(cond, ExcType, msg)                  \
    do {                                                  \
        if (!(cond)) throw ExcType(std::string(msg));     \
    } while (false)

}  // namespace hjmm
