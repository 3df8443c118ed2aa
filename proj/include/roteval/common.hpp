#pragma once

// Shared error type and small utilities used across the library.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roteval {

enum class errc {
  io_error,
  malformed_record,
  duplicate_id,
  choice_count_out_of_range,
  box_out_of_canvas,
  duplicate_response,
  unknown_orientation,
  unknown_category,
  missing_orientation,
  empty_group,
  placeholder_without_layout,
  point_out_of_canvas,
  input_out_of_range,
  precondition_violated,
  inconsistent_stats,
  endpoint_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::io_error: return "io_error";
    case errc::malformed_record: return "malformed_record";
    case errc::duplicate_id: return "duplicate_id";
    case errc::choice_count_out_of_range: return "choice_count_out_of_range";
    case errc::box_out_of_canvas: return "box_out_of_canvas";
    case errc::duplicate_response: return "duplicate_response";
    case errc::unknown_orientation: return "unknown_orientation";
    case errc::unknown_category: return "unknown_category";
    case errc::missing_orientation: return "missing_orientation";
    case errc::empty_group: return "empty_group";
    case errc::placeholder_without_layout: return "placeholder_without_layout";
    case errc::point_out_of_canvas: return "point_out_of_canvas";
    case errc::input_out_of_range: return "input_out_of_range";
    case errc::precondition_violated: return "precondition_violated";
    case errc::inconsistent_stats: return "inconsistent_stats";
    case errc::endpoint_error: return "endpoint_error";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

// splitmix64; used to derive deterministic per-record shuffle streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace roteval
