#ifndef LIDARTRAJ_LOGGING_H_
#define LIDARTRAJ_LOGGING_H_

#include <string>

namespace lidartraj {

// Warnings go to stderr unless silenced. Thread-safe.
void Warn(const std::string& message);
void SetWarningsEnabled(bool enabled);
// Number of warnings issued since start-up (counted even when silenced).
long WarningCount();

}  // namespace lidartraj

#endif  // LIDARTRAJ_LOGGING_H_
