#pragma once

#include <string>

inline std::string fixture(const std::string& name) { return std::string(COGMEN_FIXTURE_DIR) + "/" + name; }
