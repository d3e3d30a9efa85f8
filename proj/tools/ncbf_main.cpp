#include <string>
#include <vector>

#include "ncbf/cli_app.hpp"

int main(int argc, char** argv) {
  return ncbf::cli::run_app(std::vector<std::string>(argv + 1, argv + argc));
}
