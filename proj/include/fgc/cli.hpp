#pragma once

// Command-line front end: synth, info, train, eval, sweep.
//
// Exit codes: 0 success, 2 bad flags, 3 data/checkpoint errors, 4 numerical abort.

#include <iosfwd>
#include <string>
#include <vector>

namespace fgc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Header row of the sweep CSV.
inline constexpr const char* kSweepCsvHeader =
    "ratio,model,seed,auc,recall_at_k,status,epochs,wall_ms";

/// `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fgc::cli
