// Regenerates the bundled design files and the MJCF golden file.
//
//   make_fixtures <data_dir>     writes <data_dir>/fixtures/*.json and <data_dir>/golden/fig2.xml

#include "origami/catapult.hpp"
#include "origami/design_io.hpp"
#include "origami/fixtures.hpp"
#include "origami/mjcf_export.hpp"

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data_dir>\n";
    return 2;
  }
  using namespace origami;
  const std::string dir = argv[1];
  const std::pair<const char*, CreasePattern (*)()> all[] = {
      {"fig2_tripod", fixtures::tripod},   {"accordion", fixtures::accordion},       {"corrugation", fixtures::corrugation},
      {"box_loop", fixtures::box_loop},    {"block_contract", fixtures::block_contract}, {"gripper", fixtures::gripper},
      {"walker", fixtures::walker},        {"balancer", fixtures::balancer}};
  try {
    std::filesystem::create_directories(dir + "/fixtures");
    std::filesystem::create_directories(dir + "/golden");
    for (const auto& [name, build] : all) write_text_file(dir + "/fixtures/" + name + ".json", serialize(build()));
    write_text_file(dir + "/fixtures/catapult.json", serialize(build_catapult(kInitialDesign)));
    const CreasePattern fig2 = fixtures::tripod();
    write_text_file(dir + "/golden/fig2.xml", export_mjcf(fig2, mesh_pattern(fig2), SceneConfig{}, Material{}).xml_text);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
