#pragma once

// LSDS-SCENE v1 files: one `key = value` per line, `#` starts a comment.
//
//   LSDS-SCENE v1
//   seed = 7
//   object = glass, 0.5, 0.42, 0.4, 0.3, 0.05, 0.0, 60, 120   # custom spec
//   objects = training                  # training | heldout | all | name,name,...
//   velocities = 0.8, 2.3, 3.8, 4.5, 6.7
//   commanded_velocity = 3.8
//
// Unknown or repeated keys are errors. Custom objects may be referred to by
// name from `objects` and `control_object`.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lsds/error.hpp"
#include "lsds/learn/ensemble.hpp"
#include "lsds/learn/nn.hpp"
#include "lsds/sim/object.hpp"
#include "lsds/sim/scenarios.hpp"
#include "lsds/sim/vertical.hpp"

namespace lsds {

inline constexpr std::string_view kSceneMagic = "LSDS-SCENE v1";

enum class GbReading { Literal, Alternate };

inline std::string_view to_string(GbReading r) { return r == GbReading::Literal ? "literal" : "alternate"; }

struct TrainingOptions {
  std::size_t rf_estimators = TreeHyperparams::random_forest().n_estimators;
  GbReading gb_reading = GbReading::Literal;
  TrainConfig nn{};

  TreeHyperparams forest(std::uint64_t seed) const {
    auto hp = TreeHyperparams::random_forest();
    hp.n_estimators = rf_estimators;
    hp.seed = seed;
    return hp;
  }

  TreeHyperparams boosting(std::uint64_t seed) const {
    auto hp = gb_reading == GbReading::Literal ? TreeHyperparams::gradient_boosting()
                                               : TreeHyperparams::gradient_boosting_alternate();
    hp.seed = seed;
    return hp;
  }

  TrainConfig network(std::uint64_t seed) const {
    TrainConfig c = nn;
    c.seed = seed;
    return c;
  }
};

struct Scene {
  std::uint64_t seed = 0;
  std::string objects_spec = "training";
  std::vector<sim::ObjectSpec> objects = sim::training_objects();
  std::vector<sim::ObjectSpec> custom_objects;
  sim::SimConfig sim{};
  sim::VerticalSlideConfig control{};
  std::size_t max_ticks = 100;  // 4 s at 25 Hz
  TrainingOptions training{};
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double scene_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError("malformed number '" + s + "'", line);
  }
  return v;
}

inline std::uint64_t scene_count(const std::string& s, std::size_t line) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError("malformed non-negative integer '" + s + "'", line);
  }
  return v;
}

inline sim::ObjectSpec parse_object(const std::string& value, std::size_t line) {
  const auto f = split_list(value);
  if (f.size() != 9) {
    throw ParseError("object needs 9 fields: name, mu_s, mu_k, stiffness, mass, texture_noise, deformability, "
                     "contact_radius, p_contact",
                     line);
  }
  if (f[0].empty()) throw ParseError("object name is empty", line);
  sim::ObjectSpec o;
  o.name = f[0];
  double* fields[] = {&o.mu_s, &o.mu_k, &o.stiffness, &o.mass, &o.texture_noise, &o.deformability,
                      &o.contact_radius, &o.p_contact};
  for (std::size_t i = 0; i < 8; ++i) *fields[i] = scene_number(f[i + 1], line);
  try {
    o.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), line);
  }
  return o;
}

inline std::vector<sim::ObjectSpec> library(const std::vector<sim::ObjectSpec>& custom) {
  auto all = sim::training_objects();
  for (auto& o : sim::heldout_objects()) all.push_back(o);
  all.push_back(sim::pipe_object());
  for (const auto& o : custom) {
    std::erase_if(all, [&](const sim::ObjectSpec& x) { return x.name == o.name; });
    all.push_back(o);
  }
  return all;
}

inline std::vector<sim::ObjectSpec> resolve_objects(const std::string& spec, const std::vector<sim::ObjectSpec>& custom,
                                                    std::size_t line) {
  const auto lib = library(custom);
  auto pick = [&](std::vector<sim::ObjectSpec> base) {
    // a custom spec with a built-in name replaces the built-in one
    for (auto& o : base) {
      if (const auto* c = sim::find_object(custom, o.name)) o = *c;
    }
    return base;
  };
  if (spec == "training") return pick(sim::training_objects());
  if (spec == "heldout") return pick(sim::heldout_objects());
  if (spec == "all") {
    auto out = pick(sim::training_objects());
    for (auto& o : pick(sim::heldout_objects())) out.push_back(o);
    return out;
  }
  std::vector<sim::ObjectSpec> out;
  std::set<std::string> seen;
  for (const auto& name : split_list(spec)) {
    const auto* o = sim::find_object(lib, name);
    if (!o) throw ParseError("unknown object '" + name + "'", line);
    if (!seen.insert(name).second) throw ParseError("object '" + name + "' listed twice", line);
    out.push_back(*o);
  }
  return out;
}

}  // namespace detail

inline Scene parse_scene(std::istream& is) {
  Scene scene;
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError("empty scene file", lineno);
  if (detail::trim(line) != kSceneMagic) throw ParseError("expected '" + std::string(kSceneMagic) + "'", lineno);

  std::map<std::string, std::size_t> seen;
  std::size_t objects_line = 0;
  std::optional<std::string> control_object;
  std::size_t control_line = 0;

  auto count = [](std::size_t& dst) {
    return [&dst](const std::string& v, std::size_t l) { dst = static_cast<std::size_t>(detail::scene_count(v, l)); };
  };
  auto real = [](double& dst) {
    return [&dst](const std::string& v, std::size_t l) { dst = detail::scene_number(v, l); };
  };
  auto& det = scene.sim.detection;
  auto& sev = scene.sim.severity;
  auto& ctl = scene.control;
  auto& tr = scene.training;
  const std::map<std::string, std::function<void(const std::string&, std::size_t)>> setters = {
      {"seed", [&](const std::string& v, std::size_t l) { scene.seed = detail::scene_count(v, l); }},
      {"objects", [&](const std::string& v, std::size_t l) { scene.objects_spec = v; objects_line = l; }},
      {"velocities",
       [&](const std::string& v, std::size_t l) {
         sev.velocities.clear();
         for (const auto& x : detail::split_list(v)) {
           const double vel = detail::scene_number(x, l);
           if (!(vel > 0.0)) throw ParseError("velocities must be positive", l);
           sev.velocities.push_back(vel);
         }
       }},
      {"repeats", count(sev.repeats)},
      {"move_ticks", count(sev.move_ticks)},
      {"static_streams", count(det.static_streams)},
      {"grasp_increments", count(det.grasp_increments)},
      {"slip_streams", count(det.slip_streams)},
      {"rotation_streams", count(det.rotation_streams)},
      {"sensor_noise", real(scene.sim.sensor.sensor_noise)},
      {"shear_decay", real(scene.sim.sensor.shear_decay)},
      {"control_object", [&](const std::string& v, std::size_t l) { control_object = v; control_line = l; }},
      {"commanded_velocity", real(ctl.commanded_velocity)},
      {"grip_margin", real(ctl.grip_margin)},
      {"actuation_time", real(ctl.actuation_time)},
      {"lift_delay", real(ctl.lift_delay)},
      {"start_position",
       [&](const std::string& v, std::size_t l) { ctl.start_position = detail::scene_number(v, l); }},
      {"max_ticks", count(scene.max_ticks)},
      {"rf_estimators", count(tr.rf_estimators)},
      {"gb_reading",
       [&](const std::string& v, std::size_t l) {
         if (v == "literal") {
           tr.gb_reading = GbReading::Literal;
         } else if (v == "alternate") {
           tr.gb_reading = GbReading::Alternate;
         } else {
           throw ParseError("gb_reading must be 'literal' or 'alternate'", l);
         }
       }},
      {"nn_epochs", count(tr.nn.epochs)},
      {"nn_batch_size", count(tr.nn.batch_size)},
      {"nn_learning_rate", real(tr.nn.learning_rate)},
  };

  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = detail::trim(std::string_view(text).substr(0, eq));
    const std::string value = detail::trim(std::string_view(text).substr(eq + 1));
    if (key == "object") {
      auto o = detail::parse_object(value, lineno);
      if (sim::find_object(scene.custom_objects, o.name)) throw ParseError("object '" + o.name + "' defined twice", lineno);
      scene.custom_objects.push_back(std::move(o));
      continue;
    }
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParseError("unknown key '" + key + "'", lineno);
    if (auto [pos, fresh] = seen.emplace(key, lineno); !fresh) {
      throw ParseError("key '" + key + "' repeated (first on line " + std::to_string(pos->second) + ")", lineno);
    }
    it->second(value, lineno);
  }

  scene.objects = detail::resolve_objects(scene.objects_spec, scene.custom_objects, objects_line);
  {
    const std::string name = control_object.value_or(ctl.object.name);
    const auto lib = detail::library(scene.custom_objects);
    const auto* o = sim::find_object(lib, name);
    if (!o) throw ParseError("unknown control object '" + name + "'", control_line);
    ctl.object = *o;
  }
  ctl.seed = scene.seed;
  try {
    ctl.validate();
    scene.training.nn.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), lineno);
  }
  if (scene.max_ticks == 0) throw ParseError("max_ticks must be >= 1", lineno);
  if (scene.training.rf_estimators == 0) throw ParseError("rf_estimators must be >= 1", lineno);
  return scene;
}

inline Scene load_scene(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return parse_scene(is);
}

// Resolved configuration, one `key = value` per line. Parsing the output
// gives back an equivalent scene.
inline void write_scene(std::ostream& os, const Scene& s) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << kSceneMagic << '\n';
  os << "seed = " << s.seed << '\n';
  for (const auto& o : s.custom_objects) {
    os << "object = " << o.name << ", " << num(o.mu_s) << ", " << num(o.mu_k) << ", " << num(o.stiffness) << ", "
       << num(o.mass) << ", " << num(o.texture_noise) << ", " << num(o.deformability) << ", " << num(o.contact_radius)
       << ", " << num(o.p_contact) << '\n';
  }
  os << "objects = " << s.objects_spec << '\n';
  os << "velocities = ";
  for (std::size_t i = 0; i < s.sim.severity.velocities.size(); ++i) {
    os << (i ? ", " : "") << num(s.sim.severity.velocities[i]);
  }
  os << '\n';
  os << "repeats = " << s.sim.severity.repeats << '\n';
  os << "move_ticks = " << s.sim.severity.move_ticks << '\n';
  os << "static_streams = " << s.sim.detection.static_streams << '\n';
  os << "grasp_increments = " << s.sim.detection.grasp_increments << '\n';
  os << "slip_streams = " << s.sim.detection.slip_streams << '\n';
  os << "rotation_streams = " << s.sim.detection.rotation_streams << '\n';
  os << "sensor_noise = " << num(s.sim.sensor.sensor_noise) << '\n';
  os << "shear_decay = " << num(s.sim.sensor.shear_decay) << '\n';
  os << "control_object = " << s.control.object.name << '\n';
  os << "commanded_velocity = " << num(s.control.commanded_velocity) << '\n';
  os << "grip_margin = " << num(s.control.grip_margin) << '\n';
  os << "actuation_time = " << num(s.control.actuation_time) << '\n';
  os << "lift_delay = " << num(s.control.lift_delay) << '\n';
  if (s.control.start_position) os << "start_position = " << num(*s.control.start_position) << '\n';
  os << "max_ticks = " << s.max_ticks << '\n';
  os << "rf_estimators = " << s.training.rf_estimators << '\n';
  os << "gb_reading = " << to_string(s.training.gb_reading) << '\n';
  os << "nn_epochs = " << s.training.nn.epochs << '\n';
  os << "nn_batch_size = " << s.training.nn.batch_size << '\n';
  os << "nn_learning_rate = " << num(s.training.nn.learning_rate) << '\n';
}

}  // namespace lsds
