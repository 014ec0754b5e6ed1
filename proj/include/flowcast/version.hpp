#pragma once

#include <string_view>

namespace flowcast {

/// SHA-256 over the sources the binary was built from.
std::string_view code_fingerprint();
std::string_view version();

}  // namespace flowcast
