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

#ifndef HRTFKIT_TOOLS_CLI_HPP_
#define HRTFKIT_TOOLS_CLI_HPP_

#include <iosfwd>

namespace hrtfkit::cli {

// Runs the hrtfkit command line. Returns 0 on success, 2 on invalid input or
// usage errors and 1 on internal failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hrtfkit::cli

#endif  // HRTFKIT_TOOLS_CLI_HPP_
