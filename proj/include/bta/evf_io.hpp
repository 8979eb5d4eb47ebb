#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bta/evf.hpp"

namespace bta {

/// Malformed or incompatible EVF file.
class EvfFormatError : public ValidationError {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, Truncated, Inconsistent, Io };
  EvfFormatError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// EVF1 layout, all little-endian:
//   "EVF1"
//   u32 num_states, u32 num_goals, u32 num_actions
//   num_goals x (u32 row, u32 col)
//   num_states * num_goals * num_actions f64 values, (s, g, a) row-major
//   f64 r_bar_min

std::vector<unsigned char> encode_evf(const ExtendedQTable& evf);
ExtendedQTable decode_evf(const std::vector<unsigned char>& bytes);

void save_evf(const ExtendedQTable& evf, const std::filesystem::path& path);
ExtendedQTable load_evf(const std::filesystem::path& path);

}  // namespace bta
