// Copyright (c) the wavefr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WAVEFR_ERROR_HPP_
#define WAVEFR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace wfr {

// Base of every error the library raises. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An axis length is incompatible with the operation (odd size for a Haar
// step, size not divisible by 2^J, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Two operands that must agree in shape do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A scalar argument is outside its valid domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A call-order or state precondition was violated (non-scalar loss, missing
// gradients, empty dataset, incompatible checkpoint).
class ContractError : public Error {
 public:
  using Error::Error;
};

// File-system or file-format failure. Messages always carry the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wfr

#endif  // WAVEFR_ERROR_HPP_
