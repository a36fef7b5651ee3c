#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE

// Writes to "<path>.tmp" then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

FASTRE_END_NAMESPACE
