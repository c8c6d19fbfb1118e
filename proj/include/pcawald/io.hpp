#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "pcawald/linalg.hpp"

namespace pcawald {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

/// Row-major CSV, one matrix row per line, full precision.
void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

std::ofstream open_output(const std::filesystem::path& path);

}  // namespace pcawald
