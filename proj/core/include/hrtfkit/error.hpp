// Copyright 2026 The hrtfkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HRTFKIT_ERROR_HPP_
#define HRTFKIT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hrtfkit {

// Base class for everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The caller supplied data or arguments that violate a documented contract
// (bad shapes, missing files, out-of-range angles, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not produce a meaningful answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hrtfkit

#endif  // HRTFKIT_ERROR_HPP_
