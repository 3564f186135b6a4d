// bridge_oa/error.h

// Copyright 2026  The bridge-oa Authors
//
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

#ifndef BRIDGE_OA_ERROR_H_
#define BRIDGE_OA_ERROR_H_

#include <stdexcept>
#include <string>

namespace bridge_oa {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition (range, length, shape).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or cache payload failed its integrity check.
class ChecksumError : public IoError {
 public:
  using IoError::IoError;
};

/// Tensor or configuration shapes disagree.
class ShapeError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// An enhancer, recognizer or scorer failed. Carries the utterance id.
class BackendError : public Error {
 public:
  BackendError(const std::string &utt_id, const std::string &what)
      : Error(utt_id.empty() ? what : "[" + utt_id + "] " + what),
        utt_id_(utt_id) {}
  const std::string &utt_id() const { return utt_id_; }

 private:
  std::string utt_id_;
};

/// Gradient or loss became NaN/Inf.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace bridge_oa

#endif  // BRIDGE_OA_ERROR_H_
