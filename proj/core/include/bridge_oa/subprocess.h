// bridge_oa/subprocess.h

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

#ifndef BRIDGE_OA_SUBPROCESS_H_
#define BRIDGE_OA_SUBPROCESS_H_

#include <filesystem>
#include <string>

namespace bridge_oa {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string out;
  std::string err;
};

/// Runs `command` through /bin/sh -c, capturing stdout and stderr. A positive
/// timeout kills the process group when exceeded.
ProcessResult run_shell(const std::string &command, double timeout_seconds = 0.0);

/// Single-quotes `s` for the POSIX shell.
std::string shell_quote(const std::string &s);

/// Creates a fresh directory under the system temp dir and removes it with
/// all its contents on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &prefix = "bridge-oa");
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace bridge_oa

#endif  // BRIDGE_OA_SUBPROCESS_H_
