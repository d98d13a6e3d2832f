#pragma once

#include <map>
#include <string>
#include <vector>

#include "scr/autodiff/adam.hpp"

namespace scr::models {

// Flat key -> array container with a versioned header. Raw IEEE-754 doubles,
// so a save/load cycle round-trips bitwise.
void save_checkpoint(const std::string& path, const std::vector<autodiff::Adam::Param>& params);

// Loads values into existing parameters; the file must contain exactly the
// given names with matching shapes.
void load_checkpoint(const std::string& path, std::vector<autodiff::Adam::Param>& params);

std::map<std::string, std::vector<double>> read_checkpoint(const std::string& path);

}  // namespace scr::models
