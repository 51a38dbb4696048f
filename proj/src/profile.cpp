#include "scr/profile.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "scr/errors.hpp"

namespace scr {

Profile parse_profile(std::string_view text) {
  if (text == "full") return Profile::full;
  if (text == "mini") return Profile::mini;
  throw DomainError("profile must be full or mini, got '" + std::string(text) + "'");
}

std::string to_string(Profile p) { return p == Profile::full ? "full" : "mini"; }

void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace scr
