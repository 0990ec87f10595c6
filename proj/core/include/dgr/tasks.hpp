#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace dgr {

enum class TaskId { bfs, dfs, sp, prim, mis, ecc };

constexpr int kTaskCount = 6;

inline const char* task_name(TaskId t) {
  switch (t) {
    case TaskId::bfs: return "bfs";
    case TaskId::dfs: return "dfs";
    case TaskId::sp: return "sp";
    case TaskId::prim: return "prim";
    case TaskId::mis: return "mis";
    case TaskId::ecc: return "ecc";
  }
  return "?";
}

inline std::optional<TaskId> parse_task(const std::string& s) {
  if (s == "bfs") return TaskId::bfs;
  if (s == "dfs") return TaskId::dfs;
  if (s == "sp" || s == "dijkstra") return TaskId::sp;
  if (s == "prim" || s == "mst") return TaskId::prim;
  if (s == "mis") return TaskId::mis;
  if (s == "ecc" || s == "eccentricity") return TaskId::ecc;
  return std::nullopt;
}

inline TaskId parse_task_or_throw(const std::string& s) {
  auto t = parse_task(s);
  if (!t) throw std::invalid_argument("unknown task id: " + s);
  return *t;
}

// Rooted tasks carry a start node marker.
inline bool task_is_rooted(TaskId t) { return t != TaskId::mis; }

// Tasks whose machine uses the virtual node.
inline bool task_uses_virtual_node(TaskId t) {
  return t == TaskId::sp || t == TaskId::prim || t == TaskId::mis || t == TaskId::ecc;
}

inline const TaskId kAllTasks[kTaskCount] = {TaskId::bfs, TaskId::dfs, TaskId::sp,
                                             TaskId::prim, TaskId::mis, TaskId::ecc};

}  // namespace dgr
