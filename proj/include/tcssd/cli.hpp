// tcssd/cli.hpp

// Copyright 2026  tcssd authors

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

#ifndef TCSSD_CLI_HPP_
#define TCSSD_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace tcssd {

/// Runs one command line (without the program name). Returns the process
/// exit code: 0 success, 1 usage error, 2 data error.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tcssd

#endif  // TCSSD_CLI_HPP_
