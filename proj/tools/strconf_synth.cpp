// Writes a seeded synthetic STRJ file (smooth "correct" walks vs jumpy
// "incorrect" walks) for demos and smoke tests.

#include <iostream>

#include "CLI11.hpp"
#include "strconf/synthetic.hpp"
#include "strconf/trajectory_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic STRJ trajectory file"};
  strconf::synthetic::Options opt;
  std::string output;
  bool labels = true;
  app.add_option("--output,-o", output)->required();
  app.add_option("--count,-n", opt.count)->capture_default_str();
  app.add_option("--min-tokens", opt.min_tokens)->capture_default_str();
  app.add_option("--max-tokens", opt.max_tokens)->capture_default_str();
  app.add_option("--dim,-d", opt.hidden_dim)->capture_default_str();
  app.add_option("--semantic-dim", opt.semantic_dim, "0 omits semantic vectors")->capture_default_str();
  app.add_option("--jump-probability", opt.jump_probability)->capture_default_str();
  app.add_option("--seed", opt.seed)->capture_default_str();
  app.add_flag("!--no-labels", labels, "write without labels");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto records = strconf::synthetic::generate(opt);
    std::uint16_t flags = labels ? strconf::file_flags::labels : 0;
    if (opt.semantic_dim > 0) flags |= strconf::file_flags::semantic;
    strconf::write_trajectories_file(records, output, flags);
    std::cerr << "wrote " << records.size() << " trajectories to " << output << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
