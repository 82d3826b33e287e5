#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "segarena/config.hpp"

using segarena::Config;

TEST_CASE("defaults cover every registry entry") {
  const Config cfg = Config::defaults();
  for (const auto& entry : Config::registry()) {
    CHECK(cfg.get_str(entry.key) == entry.value);
    CHECK(std::string(entry.doc).size() > 0);
  }
}

TEST_CASE("unknown keys are rejected") {
  Config cfg = Config::defaults();
  CHECK_THROWS(cfg.set("no.such.key", "1"));
  CHECK_THROWS(cfg.set_pair("typo=1"));
  CHECK_THROWS(cfg.set_pair("missing-equals"));
}

TEST_CASE("file loading applies overrides and skips comments") {
  const auto path = std::filesystem::temp_directory_path() / "segarena_cfg_test.txt";
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "arena.width=96   # trailing comment\n";
    out << "\n";
    out << "rsl.b=0.5\n";
  }
  Config cfg = Config::defaults();
  cfg.load_file(path);
  CHECK(cfg.get_int("arena.width") == 96);
  CHECK(cfg.get_double("rsl.b") == doctest::Approx(0.5));
  std::filesystem::remove(path);
}

TEST_CASE("echo round trips") {
  Config cfg = Config::defaults();
  cfg.set("model.lr", "0.025");
  cfg.set("loop.epsilon", "0.5");
  const Config back = Config::from_echo(cfg.echo());
  CHECK(back.echo() == cfg.echo());
  CHECK(back.get_double("model.lr") == doctest::Approx(0.025));
}

TEST_CASE("typed getters parse lists and bools") {
  Config cfg = Config::defaults();
  const auto scales = cfg.get_int_list("model.scale_indices");
  CHECK(scales.size() == 7);
  CHECK(scales.front() == 0);
  CHECK(scales.back() == 6);
  CHECK(cfg.get_bool("sim.drag_enabled"));
  cfg.set("sim.drag_enabled", "false");
  CHECK_FALSE(cfg.get_bool("sim.drag_enabled"));
  cfg.set("sim.drag_enabled", "maybe");
  CHECK_THROWS(cfg.get_bool("sim.drag_enabled"));
}
