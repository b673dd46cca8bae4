#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nodal {

/// Runs the `nodal` command line. Returns 0 on success, 2 on usage errors and
/// 1 on runtime errors. args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace nodal
