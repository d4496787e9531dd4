#pragma once

#include <string_view>

namespace mg {

/// Writes "warning: ..." to standard error unless warnings are silenced.
void warn(std::string_view message);

/// Silences warnings (tests and sweeps that probe degenerate regimes on purpose).
void set_warnings_enabled(bool enabled) noexcept;
bool warnings_enabled() noexcept;

}  // namespace mg
