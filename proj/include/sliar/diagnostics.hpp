#pragma once

#include <functional>
#include <string>

namespace sliar {

using WarningSink = std::function<void(const std::string&)>;

// Warnings go to stderr unless a sink is installed. The sink is process-wide.
void warn(const std::string& message);
WarningSink set_warning_sink(WarningSink sink);

}  // namespace sliar
