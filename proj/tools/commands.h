#ifndef LIDARTRAJ_TOOLS_COMMANDS_H_
#define LIDARTRAJ_TOOLS_COMMANDS_H_

namespace lidartraj::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitNumeric = 3;

// Parses argv, runs one subcommand and maps failures to exit codes.
int Main(int argc, char** argv);

}  // namespace lidartraj::cli

#endif  // LIDARTRAJ_TOOLS_COMMANDS_H_
