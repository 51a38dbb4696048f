#pragma once

#include <string>
#include <string_view>

namespace scr {

/// Network capacity. `full` follows the published layer widths; `mini`
/// quarters every channel count and hidden width for desk-scale runs.
enum class Profile { full, mini };

Profile parse_profile(std::string_view text);
std::string to_string(Profile p);

/// Width scaled for the profile.
constexpr int scaled(Profile p, int full_width) { return p == Profile::full ? full_width : full_width / 4; }

/// Raises glibc's mmap/trim thresholds so that per-step activation buffers are
/// recycled instead of being faulted in from fresh pages every time.
void tune_allocator();

}  // namespace scr
