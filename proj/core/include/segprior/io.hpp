#pragma once

#include <filesystem>

#include "segprior/grid.hpp"

namespace segprior {

/// Binary PGM (P5). Accepted maxvals are 1 and 255; pixel values must be 0 or
/// maxval, and maxval pixels read back as 1. Written with maxval 255.
BinaryMask read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const BinaryMask& mask);

/// PSG1: 16-byte header (magic "PSG1", u32 height, u32 width, u32 channels,
/// little-endian) followed by height*width*channels IEEE-754 float32 values,
/// channel planes stored consecutively, each plane row-major. A file read
/// into memory and written back is byte-identical.
ScalarGrid read_psg1(const std::filesystem::path& path);
MultiClassStack read_psg1_stack(const std::filesystem::path& path);
void write_psg1(const std::filesystem::path& path, const ScalarGrid& grid);
void write_psg1(const std::filesystem::path& path, const MultiClassStack& stack);

}  // namespace segprior
