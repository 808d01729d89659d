#include "pdlab/harness/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("pdlab"));
  std::vector<std::string> args(argv + 1, argv + argc);
  return pdlab::harness::run_cli(args, std::cout, std::cerr);
}
