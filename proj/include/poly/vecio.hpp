#pragma once

#include <optional>
#include <string>

#include "poly/vectors.hpp"

namespace poly {

/// The BIGANN distribution formats. Every record is a 4-byte little-endian
/// signed dimension D followed by D payload elements:
///   fvecs: 4-byte little-endian IEEE-754 floats
///   bvecs: unsigned bytes (values 0..255, widened losslessly on read)
///   ivecs: 4-byte little-endian signed ints
enum class VecFormat { fvecs, bvecs, ivecs };

VecFormat vec_format_from_string(const std::string& name);
const char* to_string(VecFormat fmt);

/// Guesses the format from a .fvecs/.bvecs/.ivecs extension.
std::optional<VecFormat> vec_format_from_path(const std::string& path);

/// Reads the first min(limit, available) records. Truncated records fail with
/// a format error naming the byte offset; records must agree on D.
VectorSet read_vectors(const std::string& path, VecFormat fmt,
                       std::optional<std::size_t> limit = std::nullopt);

/// Writes the set in the given format. bvecs requires entries in [0, 255] and
/// ivecs requires integral entries; both round-trip bit-exactly.
void write_vectors(const VectorSet& x, const std::string& path, VecFormat fmt);

/// ivecs files of neighbor lists, as used for ground-truth interchange.
/// Rows are the per-query id lists; all rows share one length.
std::vector<std::int32_t> read_ivecs_rows(const std::string& path, std::size_t& row_len);
void write_ivecs_rows(const std::string& path, const std::int32_t* rows, std::size_t nrows,
                      std::size_t row_len);

}  // namespace poly
