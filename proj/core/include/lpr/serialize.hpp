#pragma once

#include <iosfwd>
#include <string>

#include "lpr/tasks.hpp"
#include "lpr/world.hpp"

namespace lpr {

// JSON persistence for scenes and demos. Layout (version 1):
//
//   scene: { "arm": {"links": [..], "base": [x,y], "limits": [[lo,hi],..]},
//            "config": [..], "gripper_closed": bool,
//            "obstacles": [{"kind": "segment"|"circle", "a": [x,y], "b": [x,y],
//                           "radius": r}, ..],
//            "objects": [{"kind": "prismatic"|"revolute"|"free", "anchor": [..],
//                         "axis_or_pivot": [..], "joint_value": v,
//                         "joint_range": [lo,hi], "handle_offset": [..],
//                         "success_threshold": s, "body_radius": r,
//                         "position": [..]}, ..],
//            "grasp": null | {"object": i, "joint_at_attach": v,
//                             "ee_at_attach": [x,y]} }
//
//   demo:  { "version": 1, "task": name, "seed": n, "initial_scene": scene,
//            "steps": [{"goal": {"position": [x,y], "orientation": a,
//                                "gripper_closed": bool},
//                       "gripper_closed": bool, "reward": r,
//                       "path": {"source": tag, "in_collision": bool,
//                                "configs": [[..], ..]}}, ..] }
//
// Step scenes are not stored; load_demo re-derives them by replaying the
// paths from the initial scene and verifies the stored rewards match.

std::string scene_to_json(const SceneState& scene);
SceneState scene_from_json(const std::string& text);

void save_demo(const Demo& demo, const std::string& file);
Demo load_demo(const std::string& file, const TaskSpec& task);

}  // namespace lpr
