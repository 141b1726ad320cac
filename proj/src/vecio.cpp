#include "poly/vecio.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace poly {

static_assert(sizeof(float) == 4, "IEEE-754 single precision required");

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::string& path, const char* mode) {
    File f(std::fopen(path.c_str(), mode));
    if (!f) fail(errc::io, "cannot open '" + path + "'");
    return f;
}

std::size_t element_size(VecFormat fmt) {
    return fmt == VecFormat::bvecs ? 1 : 4;
}

}  // namespace

VecFormat vec_format_from_string(const std::string& name) {
    if (name == "fvecs") return VecFormat::fvecs;
    if (name == "bvecs") return VecFormat::bvecs;
    if (name == "ivecs") return VecFormat::ivecs;
    fail(errc::invalid_argument, "unknown vector format '" + name + "' (expected fvecs, bvecs or ivecs)");
}

const char* to_string(VecFormat fmt) {
    switch (fmt) {
        case VecFormat::fvecs: return "fvecs";
        case VecFormat::bvecs: return "bvecs";
        case VecFormat::ivecs: return "ivecs";
    }
    return "?";
}

std::optional<VecFormat> vec_format_from_path(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return std::nullopt;
    const std::string ext = path.substr(dot + 1);
    if (ext == "fvecs") return VecFormat::fvecs;
    if (ext == "bvecs") return VecFormat::bvecs;
    if (ext == "ivecs") return VecFormat::ivecs;
    return std::nullopt;
}

VectorSet read_vectors(const std::string& path, VecFormat fmt, std::optional<std::size_t> limit) {
    File f = open_file(path, "rb");
    VectorSet out;
    const std::size_t elem = element_size(fmt);
    std::size_t n = 0;
    std::int32_t dim = -1;
    std::vector<unsigned char> payload;
    std::uint64_t offset = 0;

    while (!limit || n < *limit) {
        std::int32_t d = 0;
        const std::size_t got = std::fread(&d, 1, 4, f.get());
        if (got == 0) break;  // clean EOF at a record boundary
        if (got < 4) {
            fail(errc::format, path + ": truncated record header at byte offset " + std::to_string(offset));
        }
        if (d <= 0) {
            fail(errc::format, path + ": invalid dimension " + std::to_string(d) + " at byte offset " +
                                   std::to_string(offset));
        }
        if (dim < 0) {
            dim = d;
            out.dim = static_cast<std::size_t>(d);
        } else if (d != dim) {
            fail(errc::format, path + ": inconsistent dimension " + std::to_string(d) + " vs " +
                                   std::to_string(dim) + " at byte offset " + std::to_string(offset));
        }
        const std::size_t bytes = static_cast<std::size_t>(d) * elem;
        payload.resize(bytes);
        if (std::fread(payload.data(), 1, bytes, f.get()) != bytes) {
            fail(errc::format, path + ": truncated record payload at byte offset " + std::to_string(offset + 4));
        }
        const std::size_t base = out.data.size();
        out.data.resize(base + static_cast<std::size_t>(d));
        switch (fmt) {
            case VecFormat::fvecs:
                std::memcpy(out.data.data() + base, payload.data(), bytes);
                break;
            case VecFormat::bvecs:
                for (std::int32_t j = 0; j < d; ++j) out.data[base + j] = static_cast<float>(payload[j]);
                break;
            case VecFormat::ivecs: {
                std::int32_t v;
                for (std::int32_t j = 0; j < d; ++j) {
                    std::memcpy(&v, payload.data() + 4 * static_cast<std::size_t>(j), 4);
                    out.data[base + j] = static_cast<float>(v);
                }
                break;
            }
        }
        ++n;
        offset += 4 + bytes;
    }
    out.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.ids[i] = static_cast<std::int64_t>(i);
    return out;
}

void write_vectors(const VectorSet& x, const std::string& path, VecFormat fmt) {
    File f = open_file(path, "wb");
    const std::int32_t d = static_cast<std::int32_t>(x.dim);
    std::vector<unsigned char> payload(x.dim * element_size(fmt));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float* row = x.row(i);
        switch (fmt) {
            case VecFormat::fvecs:
                std::memcpy(payload.data(), row, x.dim * 4);
                break;
            case VecFormat::bvecs:
                for (std::size_t j = 0; j < x.dim; ++j) {
                    const float v = row[j];
                    require(v >= 0.0f && v <= 255.0f && v == std::floor(v), errc::invalid_argument,
                            "value " + std::to_string(v) + " not representable in bvecs");
                    payload[j] = static_cast<unsigned char>(v);
                }
                break;
            case VecFormat::ivecs:
                for (std::size_t j = 0; j < x.dim; ++j) {
                    const float v = row[j];
                    require(v == std::floor(v) && std::abs(v) <= 2147483520.0f, errc::invalid_argument,
                            "value " + std::to_string(v) + " not representable in ivecs");
                    const std::int32_t iv = static_cast<std::int32_t>(v);
                    std::memcpy(payload.data() + 4 * j, &iv, 4);
                }
                break;
        }
        if (std::fwrite(&d, 1, 4, f.get()) != 4 ||
            std::fwrite(payload.data(), 1, payload.size(), f.get()) != payload.size()) {
            fail(errc::io, "short write to '" + path + "'");
        }
    }
    if (std::fflush(f.get()) != 0) fail(errc::io, "flush failed for '" + path + "'");
}

std::vector<std::int32_t> read_ivecs_rows(const std::string& path, std::size_t& row_len) {
    // Direct int parse; going through VectorSet floats would lose precision
    // for ids above 2^24.
    File f = open_file(path, "rb");
    std::vector<std::int32_t> rows;
    std::int32_t dim = -1;
    std::uint64_t offset = 0;
    for (;;) {
        std::int32_t d = 0;
        const std::size_t got = std::fread(&d, 1, 4, f.get());
        if (got == 0) break;
        if (got < 4 || d <= 0) {
            fail(errc::format, path + ": bad record header at byte offset " + std::to_string(offset));
        }
        if (dim < 0) {
            dim = d;
        } else if (d != dim) {
            fail(errc::format, path + ": inconsistent dimension " + std::to_string(d) + " vs " +
                                   std::to_string(dim) + " at byte offset " + std::to_string(offset));
        }
        const std::size_t base = rows.size();
        rows.resize(base + static_cast<std::size_t>(d));
        if (std::fread(rows.data() + base, 4, static_cast<std::size_t>(d), f.get()) !=
            static_cast<std::size_t>(d)) {
            fail(errc::format, path + ": truncated record payload at byte offset " + std::to_string(offset + 4));
        }
        offset += 4 + 4 * static_cast<std::uint64_t>(d);
    }
    row_len = dim < 0 ? 0 : static_cast<std::size_t>(dim);
    return rows;
}

void write_ivecs_rows(const std::string& path, const std::int32_t* rows, std::size_t nrows,
                      std::size_t row_len) {
    File f = open_file(path, "wb");
    const std::int32_t d = static_cast<std::int32_t>(row_len);
    for (std::size_t i = 0; i < nrows; ++i) {
        if (std::fwrite(&d, 1, 4, f.get()) != 4 ||
            std::fwrite(rows + i * row_len, 4, row_len, f.get()) != row_len) {
            fail(errc::io, "short write to '" + path + "'");
        }
    }
    if (std::fflush(f.get()) != 0) fail(errc::io, "flush failed for '" + path + "'");
}

}  // namespace poly
