#pragma once

#include <cstdint>
#include <string>

#include "amp/config.hpp"
#include "amp/prior.hpp"
#include "amp/rl.hpp"

namespace amp {

/// Everything needed to resume training or evaluate a policy.
struct TrainingState {
  TrainerConfig config;
  std::uint64_t iteration = 0;
  long long samples = 0;
  std::string character;
  Agent agent;
  SgdMomentum policy_opt;
  SgdMomentum value_opt;
  MotionPrior prior;
  ReplayBuffer replay;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned little-endian binary file. Writes to a temporary file first and
/// renames, so a crash never leaves a truncated checkpoint.
void save_checkpoint(const std::string& path, const TrainingState& state);

/// Throws Error(kIo) if unreadable, Error(kSpecMismatch) on a bad magic,
/// version, or inconsistent network shapes.
TrainingState load_checkpoint(const std::string& path);

}  // namespace amp
