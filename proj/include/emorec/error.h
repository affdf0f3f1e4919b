// include/emorec/error.h

// Copyright 2026  The emorec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOREC_ERROR_H_
#define EMOREC_ERROR_H_

#include <stdexcept>
#include <string>

namespace emorec {

// Invalid configuration or arguments; detected before any side effects.
// The CLI maps this to exit status 1.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string &what) : std::invalid_argument(what) {}
};

// Bad or missing input data, numerical failures, I/O problems.
// The CLI maps this to exit status 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &what) : std::runtime_error(what) {}
};

}  // namespace emorec

#endif  // EMOREC_ERROR_H_
