#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pelvseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Environment variables named PELVSEG_<FLAG> (e.g. PELVSEG_JOBS, PELVSEG_MODE)
// supply defaults for the matching flags.
inline constexpr const char* kEnvPrefix = "PELVSEG_";

// args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

// Runs task(i) for i in [0, count) on up to `jobs` threads. Workers stop
// picking up new indices once `stop` returns true.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task,
                  const std::function<bool()>& stop = {});

} // namespace pelvseg::cli
