#include "lpr/serialize.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lpr {

namespace {

using nlohmann::json;

json vec2(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

Eigen::Vector2d vec2(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json config_to_json(const JointConfig& q) {
  json a = json::array();
  for (int i = 0; i < q.size(); ++i) a.push_back(q[i]);
  return a;
}

JointConfig config_from_json(const json& j) {
  JointConfig q(static_cast<int>(j.size()));
  for (int i = 0; i < q.size(); ++i) q[i] = j.at(i).get<double>();
  return q;
}

json scene_to_json_obj(const SceneState& s) {
  json arm;
  arm["links"] = s.arm.link_lengths;
  arm["base"] = vec2(s.arm.base_position);
  json limits = json::array();
  for (const auto& l : s.arm.joint_limits) limits.push_back(json::array({l[0], l[1]}));
  arm["limits"] = limits;

  json obstacles = json::array();
  for (const auto& o : s.obstacles) {
    json jo;
    jo["kind"] = o.kind == Obstacle::Kind::segment ? "segment" : "circle";
    jo["a"] = vec2(o.a);
    jo["b"] = vec2(o.b);
    jo["radius"] = o.radius;
    obstacles.push_back(jo);
  }

  json objects = json::array();
  for (const auto& o : s.objects) {
    json jo;
    jo["kind"] = to_string(o.kind);
    jo["anchor"] = vec2(o.anchor);
    jo["axis_or_pivot"] = vec2(o.axis_or_pivot);
    jo["joint_value"] = o.joint_value;
    jo["joint_range"] = json::array({o.joint_range[0], o.joint_range[1]});
    jo["handle_offset"] = vec2(o.handle_offset);
    jo["success_threshold"] = o.success_threshold;
    jo["body_radius"] = o.body_radius;
    jo["position"] = vec2(o.position);
    objects.push_back(jo);
  }

  json j;
  j["arm"] = arm;
  j["config"] = config_to_json(s.arm_config);
  j["gripper_closed"] = s.gripper_closed;
  j["obstacles"] = obstacles;
  j["objects"] = objects;
  if (s.grasp) {
    json jg;
    jg["object"] = s.grasp->object;
    jg["joint_at_attach"] = s.grasp->joint_at_attach;
    jg["ee_at_attach"] = vec2(s.grasp->ee_at_attach);
    j["grasp"] = jg;
  } else {
    j["grasp"] = nullptr;
  }
  return j;
}

SceneState scene_from_json_obj(const json& j) {
  SceneState s;
  const json& arm = j.at("arm");
  s.arm.link_lengths = arm.at("links").get<std::vector<double>>();
  s.arm.base_position = vec2(arm.at("base"));
  for (const auto& l : arm.at("limits"))
    s.arm.joint_limits.push_back({l.at(0).get<double>(), l.at(1).get<double>()});
  s.arm.validate();
  s.arm_config = config_from_json(j.at("config"));
  s.gripper_closed = j.at("gripper_closed").get<bool>();

  for (const auto& jo : j.at("obstacles")) {
    Obstacle o;
    o.kind = jo.at("kind").get<std::string>() == "segment" ? Obstacle::Kind::segment
                                                           : Obstacle::Kind::circle;
    o.a = vec2(jo.at("a"));
    o.b = vec2(jo.at("b"));
    o.radius = jo.at("radius").get<double>();
    s.obstacles.push_back(o);
  }

  for (const auto& jo : j.at("objects")) {
    ArticulatedObject o;
    const std::string kind = jo.at("kind").get<std::string>();
    if (kind == "prismatic")
      o.kind = ObjectKind::prismatic;
    else if (kind == "revolute")
      o.kind = ObjectKind::revolute;
    else if (kind == "free")
      o.kind = ObjectKind::free_body;
    else
      throw std::invalid_argument("scene_from_json: unknown object kind " + kind);
    o.anchor = vec2(jo.at("anchor"));
    o.axis_or_pivot = vec2(jo.at("axis_or_pivot"));
    o.joint_value = jo.at("joint_value").get<double>();
    o.joint_range = {jo.at("joint_range").at(0).get<double>(),
                     jo.at("joint_range").at(1).get<double>()};
    o.handle_offset = vec2(jo.at("handle_offset"));
    o.success_threshold = jo.at("success_threshold").get<double>();
    o.body_radius = jo.at("body_radius").get<double>();
    o.position = vec2(jo.at("position"));
    o.validate();
    s.objects.push_back(o);
  }

  if (!j.at("grasp").is_null()) {
    Grasp g;
    g.object = j.at("grasp").at("object").get<int>();
    g.joint_at_attach = j.at("grasp").at("joint_at_attach").get<double>();
    g.ee_at_attach = vec2(j.at("grasp").at("ee_at_attach"));
    s.grasp = g;
  }
  return s;
}

json pose_to_json(const EePose& p) {
  json j;
  j["position"] = vec2(p.position);
  j["orientation"] = p.orientation;
  j["gripper_closed"] = p.gripper_closed;
  return j;
}

EePose pose_from_json(const json& j) {
  EePose p;
  p.position = vec2(j.at("position"));
  p.orientation = j.at("orientation").get<double>();
  p.gripper_closed = j.at("gripper_closed").get<bool>();
  return p;
}

PathSource source_from_string(const std::string& s) {
  if (s == "planner") return PathSource::planner;
  if (s == "bezier") return PathSource::bezier;
  if (s == "policy") return PathSource::policy;
  if (s == "demo") return PathSource::demo;
  throw std::invalid_argument("unknown path source: " + s);
}

json path_to_json(const Path& p) {
  json j;
  j["source"] = to_string(p.source);
  j["in_collision"] = p.in_collision;
  json cfgs = json::array();
  for (const auto& c : p.configs) cfgs.push_back(config_to_json(c));
  j["configs"] = cfgs;
  return j;
}

Path path_from_json(const json& j) {
  std::vector<JointConfig> cfgs;
  for (const auto& c : j.at("configs")) cfgs.push_back(config_from_json(c));
  Path p = make_path(std::move(cfgs), source_from_string(j.at("source").get<std::string>()));
  p.in_collision = j.at("in_collision").get<bool>();
  return p;
}

}  // namespace

std::string scene_to_json(const SceneState& scene) {
  return scene_to_json_obj(scene).dump(2);
}

SceneState scene_from_json(const std::string& text) {
  return scene_from_json_obj(json::parse(text));
}

void save_demo(const Demo& demo, const std::string& file) {
  json j;
  j["version"] = 1;
  j["task"] = demo.task;
  j["seed"] = demo.seed;
  j["initial_scene"] = scene_to_json_obj(demo.initial_scene);
  json steps = json::array();
  for (const auto& st : demo.steps) {
    json js;
    js["goal"] = pose_to_json(st.goal);
    js["gripper_closed"] = st.gripper_closed;
    js["reward"] = st.reward;
    js["path"] = path_to_json(st.path);
    steps.push_back(js);
  }
  j["steps"] = steps;

  std::ofstream out(file);
  if (!out) throw std::runtime_error("save_demo: cannot open " + file);
  out << j.dump(2) << "\n";
}

Demo load_demo(const std::string& file, const TaskSpec& task) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_demo: cannot open " + file);
  json j = json::parse(in);
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("load_demo: unsupported version in " + file);

  Demo demo;
  demo.task = j.at("task").get<std::string>();
  demo.seed = j.at("seed").get<std::uint64_t>();
  demo.initial_scene = scene_from_json_obj(j.at("initial_scene"));
  if (demo.task != task.name)
    throw std::runtime_error("load_demo: demo task " + demo.task + " != " + task.name);

  // Step scenes are re-derived by replay; reward mismatch means the file does
  // not belong to this world build.
  SceneState scene = demo.initial_scene;
  for (const auto& js : j.at("steps")) {
    DemoStep st;
    st.scene = scene;
    st.goal = pose_from_json(js.at("goal"));
    st.gripper_closed = js.at("gripper_closed").get<bool>();
    st.path = path_from_json(js.at("path"));
    const StepResult res = execute_path(scene, st.path, st.gripper_closed, task.success);
    st.reward = res.reward;
    if (st.reward != js.at("reward").get<double>())
      throw std::runtime_error("load_demo: replay reward mismatch in " + file);
    scene = res.scene;
    demo.steps.push_back(std::move(st));
  }
  return demo;
}

}  // namespace lpr
