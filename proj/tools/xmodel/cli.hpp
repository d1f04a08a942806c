#pragma once

#include <string>
#include <vector>

namespace xmodel::cli {

// 0 ok, 1 usage error, 2 runtime error.
int dispatch(int argc, char** argv);
int dispatch(const std::vector<std::string>& args);  // args exclude argv[0]

}  // namespace xmodel::cli
