// Copyright 2026 The StratSample Authors.
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

#ifndef STRATSAMPLE_ERROR_H_
#define STRATSAMPLE_ERROR_H_

#include <stdexcept>
#include <string>

namespace stratsample {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Model output (or a fixture/input file) could not be parsed into the
// expected structure.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace stratsample

#endif  // STRATSAMPLE_ERROR_H_
