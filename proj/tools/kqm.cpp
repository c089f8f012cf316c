// kqm: solve and verify k-quasi-m-isometric completion problems.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kqm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Exact completion and verification of k-quasi-m-isometric operators"};
  kqm::cli::Args args;
  std::string file;
  app.add_option("command", args.command, "Operation to run")->required()->check(CLI::IsMember(kqm::cli::commands()));
  app.add_option("file", file, "Problem file (standard input when omitted)");
  app.add_option("--depth", args.depth, "Verification depth / check horizon / export depth");
  app.add_option("--t", args.t, "Extension value or family parameter, as p/q");
  app.add_option("--kappa", args.kappa, "Circuit length for characterize (2, 3 or 4)");
  app.add_option("--approx", args.approx, "Print decimal weights with N significant digits");
  app.add_option("--export-graph", args.export_graph, "Write the depth-capped graph in DOT format to PATH");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kqm::cli::kUsage;
  }
  if (!file.empty() && file != "-") args.file = file;
  return kqm::cli::run(args, std::cin, std::cout, std::cerr);
}
