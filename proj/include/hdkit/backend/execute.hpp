#pragma once

#include <map>
#include <optional>

#include "hdkit/backend/accel.hpp"
#include "hdkit/backend/value.hpp"

namespace hdkit::backend {

enum class BackendTag : std::uint8_t { Interp, CpuParallel, AccelSim };

BackendTag backend_from_string(std::string_view s);
std::string_view to_string(BackendTag t);

struct BufferMove {
  std::string stage;
  std::string buffer;
  std::string direction;  // "h2d" | "d2h"
  std::int64_t count = 1;
  std::int64_t bytes = 0;
  bool operator==(const BufferMove&) const = default;
};

// Host<->device transfer schedule for the StageLoop nodes of a program.
// `hoisted` lifts loop-invariant buffers (encoder, class memory) outside the
// per-sample loop; `naive` re-transfers them every iteration. The executor
// consumes the hoisted plan; both exist so their costs can be compared.
struct MovementPlan {
  std::vector<BufferMove> moves;
  std::int64_t total_bytes() const;
};

MovementPlan hoist_data_movement(const ir::Program& p);
MovementPlan naive_data_movement(const ir::Program& p);

struct ExecReport {
  std::map<std::string, Value> outputs;
  double wall_seconds = 0.0;
  std::optional<AccelCounters> accel;
  std::vector<BufferMove> moved_buffers;

  // machine-readable key=value lines (one per datum) for the bench harness
  std::string to_kv_text() const;
};

// Run a validated program. Interp executes scheduled nodes through the serial
// reference kernels; CpuParallel uses the OpenMP kernels and parallelizes
// loop trips and per-sample stage iterations; AccelSim executes matching
// StageLoop nodes through an AccelDevice (per the hoisted movement plan) and
// everything else on the Interp path.
ExecReport execute(const ir::Program& p, const std::map<std::string, Value>& inputs,
                   BackendTag backend, std::uint64_t seed,
                   const AccelProfile* profile = nullptr);

}  // namespace hdkit::backend
