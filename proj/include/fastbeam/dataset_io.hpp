#pragma once

#include <string>

#include "fastbeam/channel.hpp"

namespace fastbeam {

/// Self-describing text container. Field order per sample: norm factor, then
/// the channel entries column-major as re/im pairs, then the optional label.
/// Values round-trip exactly.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace fastbeam
