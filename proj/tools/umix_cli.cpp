// Command line driver: umix_cli <config.json> [--output-dir DIR] [--seed N]

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "umix/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Twisted transfer operators and mixing diagnostics"};
  std::string config, out_dir;
  std::uint64_t seed = 0;
  app.add_option("config", config, "JSON config file")->required();
  auto* od = app.add_option("--output-dir", out_dir, "Directory for summary.json and CSV tables");
  auto* so = app.add_option("--seed", seed, "Overrides the config seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    nlohmann::json j = umix::load_config(config);
    if (so->count()) j["seed"] = seed;
    if (!od->count()) out_dir = j.is_object() && j.contains("output_dir") && j["output_dir"].is_string()
                                    ? j["output_dir"].get<std::string>()
                                    : "out";
    umix::RunReport r = umix::run(j);
    umix::emit_report(r, out_dir);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& [name, sec] : r.timings) std::fprintf(stderr, "timing %s %.3f s\n", name.c_str(), sec);
    return 0;
  } catch (const umix::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return umix::is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
