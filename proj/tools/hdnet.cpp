#include "hdnet_cli.hpp"

int main(int argc, char** argv) {
  return hdnet::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
