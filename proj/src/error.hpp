#pragma once

#include <stdexcept>
#include <string>

namespace bax {

enum class Errc {
  invalid_argument,
  io_error,
  validation,
  degenerate_vector,
  all_depth_invalid,
  degenerate_hand,
  missing_hand,
  unrepairable_trajectory,
  empty_mask,
  no_skill_segment,
  non_monotone_stages,
  unsatisfiable_spec,
  planner_failure,
  unowned_keypoints,
  inconsistent_demos,
  corrupt_shard,
  unknown_task,
  verification_failed,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::io_error: return "io_error";
    case Errc::validation: return "validation";
    case Errc::degenerate_vector: return "degenerate_vector";
    case Errc::all_depth_invalid: return "all_depth_invalid";
    case Errc::degenerate_hand: return "degenerate_hand";
    case Errc::missing_hand: return "missing_hand";
    case Errc::unrepairable_trajectory: return "unrepairable_trajectory";
    case Errc::empty_mask: return "empty_mask";
    case Errc::no_skill_segment: return "no_skill_segment";
    case Errc::non_monotone_stages: return "non_monotone_stages";
    case Errc::unsatisfiable_spec: return "unsatisfiable_spec";
    case Errc::planner_failure: return "planner_failure";
    case Errc::unowned_keypoints: return "unowned_keypoints";
    case Errc::inconsistent_demos: return "inconsistent_demos";
    case Errc::corrupt_shard: return "corrupt_shard";
    case Errc::unknown_task: return "unknown_task";
    case Errc::verification_failed: return "verification_failed";
  }
  return "unknown";
}

}  // namespace bax
