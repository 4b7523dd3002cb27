#pragma once

#include <yaml-cpp/yaml.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "quadjump/constraints.hpp"
#include "quadjump/errors.hpp"
#include "quadjump/planner.hpp"
#include "quadjump/rng.hpp"
#include "quadjump/task.hpp"
#include "quadjump/trajectory.hpp"

namespace quadjump {

namespace detail {

inline constexpr char kTrajectoryMagic[16] = {'Q', 'J', 'M', 'P', 'T', 'R', 'A', 'J',
                                              'B', 'I', 'N', '\0', '\0', '\0', '\0', '\0'};
inline constexpr std::uint32_t kTrajectoryVersion = 1;
inline constexpr std::size_t kHeaderDoubles = 52;
inline constexpr std::size_t kRecordDoubles = 33;

class ByteWriter {
 public:
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_u32(std::uint32_t v) { put_bytes(&v, sizeof(v)); }
  void put_u64(std::uint64_t v) { put_bytes(&v, sizeof(v)); }
  void put_f64(double v) { put_bytes(&v, sizeof(v)); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}
  void get_bytes(void* out, std::size_t n) {
    if (pos_ + n > size_) throw CorruptionError("trajectory file truncated");
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  std::uint32_t get_u32() { std::uint32_t v; get_bytes(&v, sizeof(v)); return v; }
  std::uint64_t get_u64() { std::uint64_t v; get_bytes(&v, sizeof(v)); return v; }
  double get_f64() { double v; get_bytes(&v, sizeof(v)); return v; }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(const std::vector<char>& bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size())));
}

inline void write_state(ByteWriter& w, const PlanarState& s) {
  w.put_f64(s.pos_t); w.put_f64(s.pos_z); w.put_f64(s.angle);
  w.put_f64(s.vel_t); w.put_f64(s.vel_z); w.put_f64(s.angvel);
}

inline PlanarState read_state(ByteReader& r) {
  PlanarState s;
  s.pos_t = r.get_f64(); s.pos_z = r.get_f64(); s.angle = r.get_f64();
  s.vel_t = r.get_f64(); s.vel_z = r.get_f64(); s.angvel = r.get_f64();
  return s;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Serializes a trajectory to the little-endian binary record: magic header,
/// version, task and design metadata, wrench coefficients, fixed-width
/// samples, and a CRC32 of the sample payload.
inline void save_trajectory(const Trajectory& traj, const std::string& path) {
  detail::ByteWriter payload;
  for (const TrajectorySample& s : traj.samples) {
    payload.put_f64(s.t);
    detail::write_state(payload, s.state);
    payload.put_f64(static_cast<double>(s.phase));
    for (int pair = 0; pair < 2; ++pair) {
      payload.put_f64(s.foot_force[pair].x());
      payload.put_f64(s.foot_force[pair].y());
    }
    for (const auto* triple_set : {&s.q, &s.qd, &s.tau})
      for (int pair = 0; pair < 2; ++pair) {
        payload.put_f64((*triple_set)[pair].roll);
        payload.put_f64((*triple_set)[pair].pitch);
        payload.put_f64((*triple_set)[pair].knee);
      }
    payload.put_f64(s.residual);
    payload.put_f64(s.reach_deficit[0]);
    payload.put_f64(s.reach_deficit[1]);
  }

  detail::ByteWriter out;
  out.put_bytes(detail::kTrajectoryMagic, sizeof(detail::kTrajectoryMagic));
  out.put_u32(detail::kTrajectoryVersion);
  out.put_u32(static_cast<std::uint32_t>(traj.motion.kind));
  out.put_u64(traj.samples.size());
  out.put_u64(traj.feasibility_hash);
  out.put_u32(detail::crc32_of(payload.bytes()));

  detail::write_state(out, traj.task.start_state);
  out.put_f64(traj.task.target_t);
  out.put_f64(traj.task.target_z);
  out.put_f64(traj.task.target_angle);
  out.put_f64(traj.task.landing_depth ? 1.0 : 0.0);
  out.put_f64(traj.task.landing_depth.value_or(0.0));
  out.put_f64(traj.task.obstacle ? 1.0 : 0.0);
  const ObstacleSpec obs = traj.task.obstacle.value_or(ObstacleSpec{});
  out.put_f64(obs.crossing_coord);
  out.put_f64(obs.ground_top_z);
  out.put_f64(obs.aerial_bottom_z);
  out.put_f64(obs.expansion_margin);
  out.put_f64(traj.t1);
  out.put_f64(traj.t2);
  out.put_f64(traj.t3);
  out.put_f64(traj.sample_dt);
  out.put_f64(traj.energy_j);
  for (double v : traj.design.flat()) out.put_f64(v);
  for (int k = 0; k < 3; ++k) {
    out.put_f64(traj.profile.phase1[k].a);
    out.put_f64(traj.profile.phase1[k].b);
  }
  for (int k = 0; k < 3; ++k) {
    out.put_f64(traj.profile.phase2[k].c);
    out.put_f64(traj.profile.phase2[k].d);
    out.put_f64(traj.profile.phase2[k].e);
  }
  for (int pair = 0; pair < 2; ++pair) {
    out.put_f64(traj.stance_feet[pair].x());
    out.put_f64(traj.stance_feet[pair].y());
  }
  out.put_bytes(payload.bytes().data(), payload.bytes().size());

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw StorageError("cannot open trajectory file for writing: " + path);
  file.write(out.bytes().data(), static_cast<std::streamsize>(out.bytes().size()));
  if (!file) throw StorageError("short write on trajectory file: " + path);
}

/// Loads a trajectory record, verifying magic, version, and payload CRC.
inline Trajectory load_trajectory(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw StorageError("cannot open trajectory file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  detail::ByteReader in(bytes.data(), bytes.size());

  char magic[16];
  in.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, detail::kTrajectoryMagic, sizeof(magic)) != 0)
    throw CorruptionError("trajectory file has wrong magic: " + path);
  if (in.get_u32() != detail::kTrajectoryVersion)
    throw CorruptionError("unsupported trajectory file version: " + path);

  Trajectory traj;
  traj.motion = MotionType::make(static_cast<MotionKind>(in.get_u32()));
  const std::uint64_t sample_count = in.get_u64();
  traj.feasibility_hash = in.get_u64();
  const std::uint32_t stored_crc = in.get_u32();

  traj.task.motion = traj.motion;
  traj.task.start_state = detail::read_state(in);
  traj.task.target_t = in.get_f64();
  traj.task.target_z = in.get_f64();
  traj.task.target_angle = in.get_f64();
  const bool has_depth = in.get_f64() != 0.0;
  const double depth = in.get_f64();
  if (has_depth) traj.task.landing_depth = depth;
  const bool has_obstacle = in.get_f64() != 0.0;
  ObstacleSpec obs;
  obs.crossing_coord = in.get_f64();
  obs.ground_top_z = in.get_f64();
  obs.aerial_bottom_z = in.get_f64();
  obs.expansion_margin = in.get_f64();
  if (has_obstacle) traj.task.obstacle = obs;
  traj.t1 = in.get_f64();
  traj.t2 = in.get_f64();
  traj.t3 = in.get_f64();
  traj.sample_dt = in.get_f64();
  traj.energy_j = in.get_f64();
  std::array<double, 12> flat;
  for (double& v : flat) v = in.get_f64();
  traj.design = DesignVector::from_flat(flat);
  traj.profile.t1 = traj.t1;
  traj.profile.t2 = traj.t2;
  traj.profile.t3 = traj.t3;
  traj.profile.motion = traj.motion;
  for (int k = 0; k < 3; ++k) {
    traj.profile.phase1[k].a = in.get_f64();
    traj.profile.phase1[k].b = in.get_f64();
  }
  for (int k = 0; k < 3; ++k) {
    traj.profile.phase2[k].c = in.get_f64();
    traj.profile.phase2[k].d = in.get_f64();
    traj.profile.phase2[k].e = in.get_f64();
  }
  for (int pair = 0; pair < 2; ++pair) {
    traj.stance_feet[pair].x() = in.get_f64();
    traj.stance_feet[pair].y() = in.get_f64();
  }

  const std::size_t payload_size = sample_count * detail::kRecordDoubles * sizeof(double);
  if (in.remaining() != payload_size) throw CorruptionError("trajectory payload size mismatch: " + path);
  std::vector<char> payload(payload_size);
  in.get_bytes(payload.data(), payload_size);
  if (detail::crc32_of(payload) != stored_crc)
    throw CorruptionError("trajectory payload checksum mismatch: " + path);

  detail::ByteReader rec(payload.data(), payload.size());
  traj.samples.resize(sample_count);
  for (TrajectorySample& s : traj.samples) {
    s.t = rec.get_f64();
    s.state = detail::read_state(rec);
    s.phase = static_cast<PhaseLabel>(static_cast<int>(rec.get_f64()));
    for (int pair = 0; pair < 2; ++pair) {
      s.foot_force[pair].x() = rec.get_f64();
      s.foot_force[pair].y() = rec.get_f64();
    }
    for (auto* triple_set : {&s.q, &s.qd, &s.tau})
      for (int pair = 0; pair < 2; ++pair) {
        (*triple_set)[pair].roll = rec.get_f64();
        (*triple_set)[pair].pitch = rec.get_f64();
        (*triple_set)[pair].knee = rec.get_f64();
      }
    s.residual = rec.get_f64();
    s.reach_deficit[0] = rec.get_f64();
    s.reach_deficit[1] = rec.get_f64();
  }
  return traj;
}

/// World-frame target position of a planar task, by motion plane.
inline std::array<double, 3> target_world_position(const JumpTask& task) {
  switch (task.motion.plane_axis) {
    case PlaneAxis::pitch: return {task.target_t, 0.0, task.target_z};
    case PlaneAxis::roll: return {0.0, task.target_t, task.target_z};
    case PlaneAxis::yaw: default: return {0.0, 0.0, task.target_z};
  }
}

struct LibraryEntry {
  std::string file;
  MotionKind motion = MotionKind::front;
  std::array<double, 3> target_pos = {0.0, 0.0, 0.0};
  double target_rot = 0.0;
  double energy_j = 0.0;
  std::optional<ObstacleSpec> feasible_box;
  std::uint32_t checksum = 0;
};

/// Energy-sorted index over the stored trajectories.
struct LibraryIndex {
  std::vector<LibraryEntry> entries;

  void sort_by_energy() {
    std::sort(entries.begin(), entries.end(), [](const LibraryEntry& a, const LibraryEntry& b) {
      if (a.energy_j != b.energy_j) return a.energy_j < b.energy_j;
      return a.file < b.file;
    });
  }

  bool is_sorted() const {
    return std::is_sorted(entries.begin(), entries.end(),
                          [](const LibraryEntry& a, const LibraryEntry& b) {
                            if (a.energy_j != b.energy_j) return a.energy_j < b.energy_j;
                            return a.file < b.file;
                          });
  }

  /// Deterministic YAML emission (fixed key order, %.17g doubles).
  void save(const std::string& path) const {
    if (!is_sorted()) throw StorageError("library index must be energy-sorted before saving");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StorageError("cannot open index for writing: " + path);
    out << "version: 1\n";
    out << "entries:\n";
    for (const LibraryEntry& e : entries) {
      out << "  - file: " << e.file << "\n";
      out << "    motion: " << to_string(e.motion) << "\n";
      out << "    target_pos: [" << detail::format_double(e.target_pos[0]) << ", "
          << detail::format_double(e.target_pos[1]) << ", "
          << detail::format_double(e.target_pos[2]) << "]\n";
      out << "    target_rot: " << detail::format_double(e.target_rot) << "\n";
      out << "    energy_j: " << detail::format_double(e.energy_j) << "\n";
      if (e.feasible_box) {
        out << "    feasible_box:\n";
        out << "      crossing: " << detail::format_double(e.feasible_box->crossing_coord) << "\n";
        out << "      ground_top_z: " << detail::format_double(e.feasible_box->ground_top_z) << "\n";
        out << "      aerial_bottom_z: " << detail::format_double(e.feasible_box->aerial_bottom_z)
            << "\n";
        out << "      margin: " << detail::format_double(e.feasible_box->expansion_margin) << "\n";
      } else {
        out << "    feasible_box: null\n";
      }
      out << "    checksum: " << e.checksum << "\n";
    }
    if (!out) throw StorageError("short write on index: " + path);
  }

  static LibraryIndex load(const std::string& path) {
    YAML::Node root;
    try {
      root = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
      throw StorageError("cannot parse library index " + path + ": " + e.what());
    }
    LibraryIndex index;
    for (const YAML::Node& node : root["entries"]) {
      LibraryEntry e;
      e.file = node["file"].as<std::string>();
      e.motion = motion_kind_from_string(node["motion"].as<std::string>());
      for (int i = 0; i < 3; ++i) e.target_pos[i] = node["target_pos"][i].as<double>();
      e.target_rot = node["target_rot"].as<double>();
      e.energy_j = node["energy_j"].as<double>();
      if (node["feasible_box"] && !node["feasible_box"].IsNull()) {
        ObstacleSpec obs;
        obs.crossing_coord = node["feasible_box"]["crossing"].as<double>();
        obs.ground_top_z = node["feasible_box"]["ground_top_z"].as<double>();
        obs.aerial_bottom_z = node["feasible_box"]["aerial_bottom_z"].as<double>();
        obs.expansion_margin = node["feasible_box"]["margin"].as<double>();
        e.feasible_box = obs;
      }
      e.checksum = node["checksum"].as<std::uint32_t>();
      index.entries.push_back(e);
    }
    if (!index.is_sorted()) throw CorruptionError("library index is not energy-sorted: " + path);
    return index;
  }
};

/// A selector request: desired world position and rotation, with optional
/// motion-type and obstacle filters.
struct Query {
  std::array<double, 3> position = {0.0, 0.0, 0.0};
  double rotation = 0.0;
  std::optional<MotionKind> motion_filter;
  std::optional<ObstacleSpec> obstacle;
  /// Meters one radian of rotation mismatch counts as.
  double rotation_weight = 0.1;
};

inline bool entry_matches_query(const LibraryEntry& e, const Query& q) {
  if (q.motion_filter && e.motion != *q.motion_filter) return false;
  if (q.obstacle) {
    // The stored motion must have been planned through a window at least as
    // restrictive as the queried one, near the same crossing plane.
    if (!e.feasible_box) return false;
    if (e.feasible_box->ground_top_z < q.obstacle->ground_top_z - 1e-9) return false;
    if (e.feasible_box->aerial_bottom_z > q.obstacle->aerial_bottom_z + 1e-9) return false;
    if (std::abs(e.feasible_box->crossing_coord - q.obstacle->crossing_coord) > 0.15) return false;
  }
  return true;
}

inline double query_distance(const LibraryEntry& e, const Query& q) {
  double d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double diff = e.target_pos[i] - q.position[i];
    d2 += diff * diff;
  }
  const double rot = q.rotation_weight * (e.target_rot - q.rotation);
  return std::sqrt(d2 + rot * rot);
}

/// Picks the stored entry nearest the query in weighted Euclidean distance;
/// distance ties within 1e-9 go to the lower energy (then the file name).
inline const LibraryEntry& select_entry(const LibraryIndex& index, const Query& q) {
  double min_distance = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const LibraryEntry& e : index.entries) {
    if (!entry_matches_query(e, q)) continue;
    any = true;
    min_distance = std::min(min_distance, query_distance(e, q));
  }
  if (!any) throw LookupError("no library entry matches the query");
  // Entries are energy-sorted (file name on energy ties), so the first entry
  // inside the tie window is the minimal-energy choice.
  for (const LibraryEntry& e : index.entries) {
    if (!entry_matches_query(e, q)) continue;
    if (query_distance(e, q) <= min_distance + 1e-9) return e;
  }
  throw LookupError("no library entry matches the query");
}

/// Selector returning the chosen entry and its loaded trajectory.
inline std::pair<const LibraryEntry*, Trajectory> select(const LibraryIndex& index, const Query& q,
                                                         const std::string& library_dir) {
  const LibraryEntry& entry = select_entry(index, q);
  const std::filesystem::path path = std::filesystem::path(library_dir) / entry.file;
  return {&entry, load_trajectory(path.string())};
}

/// Library construction parameters.
struct LibraryBuildConfig {
  int task_count = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
  DeConfig de_template;        // bounds are derived per task
  double sample_dt = 0.005;

  LibraryBuildConfig() {
    de_template.population = 60;
    de_template.max_generations = 300;
    de_template.early_stop.patience = 60;
  }
};

/// Draws a randomized jumping task: mostly directional jumps, plus ground
/// obstacles (heights uniform on [0.05, 0.35]), aerial windows, yaw spins on
/// a height-and-rotation grid, and back flips.
inline JumpTask sample_library_task(std::uint64_t seed, int task_id) {
  SplitMix64 rng(derive_seed(seed, 0x7a5cULL, static_cast<std::uint64_t>(task_id)));
  JumpTask task;
  const double pick = rng.uniform01();
  if (pick < 0.40) {  // plain front jump
    task.motion = MotionType::make(MotionKind::front);
    task.target_t = 0.15 + 0.30 * rng.uniform01();
  } else if (pick < 0.55) {  // rear jump
    task.motion = MotionType::make(MotionKind::rear);
    task.target_t = -(0.10 + 0.25 * rng.uniform01());
  } else if (pick < 0.70) {  // front jump over a ground obstacle
    task.motion = MotionType::make(MotionKind::front);
    task.target_t = 0.25 + 0.25 * rng.uniform01();
    ObstacleSpec obs;
    obs.ground_top_z = 0.05 + 0.30 * rng.uniform01();
    obs.aerial_bottom_z = 10.0;
    obs.crossing_coord = task.start_state.pos_t +
                         (0.35 + 0.3 * rng.uniform01()) * (task.target_t - task.start_state.pos_t);
    obs.expansion_margin = 0.02;
    task.obstacle = obs;
    task.landing_depth = 0.14;
  } else if (pick < 0.85) {  // yaw spin over a height/rotation grid
    task.motion = MotionType::make(MotionKind::yaw_spin);
    task.target_t = task.start_state.pos_t;
    const std::array<double, 4> angles = {M_PI / 2, -M_PI / 2, M_PI, -M_PI};
    task.target_angle = angles[rng.below(4)];
    task.target_z = task.start_state.pos_z + 0.02 * rng.below(3);
  } else {  // back flip
    task.motion = MotionType::make(MotionKind::back_flip);
    task.target_t = task.start_state.pos_t - (0.05 + 0.20 * rng.uniform01());
    task.target_angle = -2.0 * M_PI;
  }
  return task;
}

/// Builds the offline pre-motion library: one DE run per sampled task, fanned
/// out over `jobs` workers; only fully feasible results are stored. Tasks
/// with no feasible solution within budget land in `rejects.log`. Emits the
/// energy-sorted YAML index. Deterministic for a fixed seed regardless of the
/// worker count.
inline LibraryIndex build_library(const LibraryBuildConfig& cfg, const RobotParams& params,
                                  const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  if (!std::filesystem::is_directory(out_dir))
    throw StorageError("library output directory is not writable: " + out_dir);

  struct TaskOutcome {
    bool feasible = false;
    JumpTask task;
    Trajectory trajectory;
    int worst_level = -1;
  };
  std::vector<TaskOutcome> outcomes(cfg.task_count);

  detail::parallel_for(cfg.task_count, cfg.jobs, [&](int task_id) {
    TaskOutcome& out = outcomes[task_id];
    out.task = sample_library_task(cfg.seed, task_id);
    DeConfig de = cfg.de_template;
    de.jobs = 1;  // parallelism lives at the task fan-out level
    de.seed = derive_seed(cfg.seed, 0xde00ULL, static_cast<std::uint64_t>(task_id));
    PlanResult plan = plan_jump(out.task, params, de, nullptr, cfg.sample_dt);
    out.worst_level = plan.fitness.worst_level;
    if (plan.fitness.in_energy_mode) {
      out.feasible = true;
      out.trajectory = std::move(plan.trajectory);
    }
  });

  LibraryIndex index;
  std::ofstream rejects(std::filesystem::path(out_dir) / "rejects.log", std::ios::trunc);
  for (int task_id = 0; task_id < cfg.task_count; ++task_id) {
    TaskOutcome& out = outcomes[task_id];
    if (!out.feasible) {
      rejects << "task " << task_id << " motion " << to_string(out.task.motion.kind)
              << " worst_level " << out.worst_level << "\n";
      continue;
    }
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%04d.bin", task_id);
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    save_trajectory(out.trajectory, path);

    LibraryEntry entry;
    entry.file = name;
    entry.motion = out.task.motion.kind;
    entry.target_pos = target_world_position(out.task);
    entry.target_rot = out.task.target_angle;
    entry.energy_j = out.trajectory.energy_j;
    entry.feasible_box = out.task.obstacle;
    {
      std::ifstream file(path, std::ios::binary);
      std::vector<char> bytes((std::istreambuf_iterator<char>(file)),
                              std::istreambuf_iterator<char>());
      entry.checksum = detail::crc32_of(bytes);
    }
    index.entries.push_back(std::move(entry));
  }

  index.sort_by_energy();
  index.save((std::filesystem::path(out_dir) / "index.yaml").string());
  return index;
}

}  // namespace quadjump
