#include <gtest/gtest.h>

#include <sstream>

#include "lsds/scene.hpp"

using namespace lsds;

namespace {

Scene parse(const std::string& body) {
  std::istringstream is("LSDS-SCENE v1\n" + body);
  return parse_scene(is);
}

std::size_t error_line(const std::string& body) {
  try {
    parse(body);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Scene, DefaultsWithoutKeys) {
  const Scene s = parse("");
  EXPECT_EQ(s.seed, 0u);
  EXPECT_EQ(s.objects.size(), 15u);
  EXPECT_EQ(s.control.object.name, "pipe");
  EXPECT_EQ(s.control.commanded_velocity, 3.8);
  EXPECT_EQ(s.max_ticks, 100u);
  EXPECT_EQ(s.training.gb_reading, GbReading::Literal);
}

TEST(Scene, ParsesKeysCommentsAndObjectLists) {
  const Scene s = parse(
      "# a comment\n"
      "seed = 12   # trailing comment\n"
      "objects = mug, sponge , pipe\n"
      "velocities = 1.5, 3\n"
      "repeats = 2\n"
      "commanded_velocity = 2.5\n"
      "gb_reading = alternate\n"
      "nn_epochs = 7\n");
  EXPECT_EQ(s.seed, 12u);
  ASSERT_EQ(s.objects.size(), 3u);
  EXPECT_EQ(s.objects[1].name, "sponge");
  EXPECT_EQ(s.sim.severity.velocities, (std::vector<double>{1.5, 3.0}));
  EXPECT_EQ(s.sim.severity.repeats, 2u);
  EXPECT_EQ(s.control.commanded_velocity, 2.5);
  EXPECT_EQ(s.control.seed, 12u);
  EXPECT_EQ(s.training.gb_reading, GbReading::Alternate);
  auto alt = TreeHyperparams::gradient_boosting_alternate();
  alt.seed = 3;
  EXPECT_EQ(s.training.boosting(3), alt);
  EXPECT_EQ(s.training.network(5).epochs, 7u);
  EXPECT_EQ(s.training.network(5).seed, 5u);
}

TEST(Scene, NamedGroups) {
  EXPECT_EQ(parse("objects = heldout\n").objects.size(), 5u);
  EXPECT_EQ(parse("objects = all\n").objects.size(), 20u);
}

TEST(Scene, CustomObjectsOverrideAndResolve) {
  const Scene s = parse(
      "object = glass, 0.5, 0.42, 0.4, 0.3, 0.05, 0.0, 60, 120\n"
      "object = pipe, 0.5, 0.45, 0.06, 0.25, 0.05, 0.02, 58, 20\n"
      "objects = glass, mug\n"
      "control_object = pipe\n");
  EXPECT_EQ(s.objects[0].name, "glass");
  EXPECT_EQ(s.objects[0].mu_k, 0.42);
  EXPECT_EQ(s.control.object.mu_s, 0.5);
  EXPECT_EQ(s.custom_objects.size(), 2u);
}

TEST(Scene, ErrorsCarryTheLineNumber) {
  EXPECT_EQ(error_line("seed = 1\nbogus = 3\n"), 3u);
  EXPECT_EQ(error_line("seed = 1\nseed = 2\n"), 3u);
  EXPECT_EQ(error_line("seed = x\n"), 2u);
  EXPECT_EQ(error_line("no equals sign\n"), 2u);
  EXPECT_EQ(error_line("\nobjects = mug, unicorn\n"), 3u);
  EXPECT_EQ(error_line("velocities = 1, -2\n"), 2u);
  EXPECT_EQ(error_line("gb_reading = maybe\n"), 2u);
  EXPECT_EQ(error_line("object = bad, 0.4, 0.5, 0.4, 0.3, 0.05, 0.0, 60, 120\n"), 2u);
  EXPECT_EQ(error_line("object = short, 0.4\n"), 2u);
  EXPECT_EQ(error_line("control_object = unicorn\n"), 2u);
  std::istringstream wrong("LSDS-SCENE v2\n");
  EXPECT_THROW(parse_scene(wrong), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(parse_scene(empty), ParseError);
}

TEST(Scene, InvalidValuesAreRejected) {
  EXPECT_THROW(parse("max_ticks = 0\n"), ParseError);
  EXPECT_THROW(parse("nn_epochs = 0\n"), ParseError);
  EXPECT_THROW(parse("grip_margin = -1\n"), ParseError);
}

TEST(Scene, WriteThenParseIsAFixedPoint) {
  const Scene s = parse(
      "seed = 4\n"
      "object = glass, 0.5, 0.42, 0.4, 0.3, 0.05, 0.0, 60, 120\n"
      "objects = glass, book\n"
      "velocities = 0.8, 6.7\n"
      "start_position = 80\n"
      "nn_learning_rate = 0.002\n");
  std::ostringstream a;
  write_scene(a, s);
  std::istringstream is(a.str());
  const Scene back = parse_scene(is);
  std::ostringstream b;
  write_scene(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(back.objects, s.objects);
  EXPECT_EQ(back.control.start_position, 80.0);
  EXPECT_EQ(back.training.nn, s.training.nn);
}
