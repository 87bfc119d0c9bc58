#pragma once

#include <string>
#include <vector>

#include "amp/character.hpp"
#include "amp/motion.hpp"

namespace amp {

struct ClipParams {
  double duration = 2.0;     // seconds; frames = round(duration * frame_rate)
  double frame_rate = 30.0;  // Hz
  double frequency = 1.0;    // Hz, oscillate and gait
  double amplitude = 0.8;    // rad
  double speed = 1.0;        // m/s, gait
  double reach_angle = 2.6;  // rad of shoulder raise at the top of a reach
};

// Synthetic stand-ins for motion capture. Clips are loopable: the frame after
// the last one is frame 0 advanced by one full cycle, so the loop spans
// exactly `duration` seconds.
//   oscillate: sinusoidal joint angles about the rest pose; the pointmass
//              wheel rocks and rolls accordingly.
//   gait:      root advancing at `speed`; walker legs swing in anti-phase, the
//              pointmass wheel rolls without slipping.
//   reach:     arm raise and lower for characters with a "shoulder" joint.
MotionClip generate_clip(const std::string& kind, const CharacterModel& model, const ClipParams& params);
std::vector<std::string> clip_kinds();

// Parses "<kind>[:key=value]..." where keys are ClipParams field names, e.g.
// "gait:speed=-3:frequency=2". Throws Error(kInvalidInput) on unknown keys or
// malformed values.
MotionClip generate_clip_from_spec(const std::string& spec, const CharacterModel& model);

}  // namespace amp
