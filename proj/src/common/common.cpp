#include "imet/common/atomic_file.hpp"
#include "imet/common/error.hpp"
#include "imet/common/rng.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

namespace imet {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_shape: return "invalid-shape";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::invalid_label: return "invalid-label";
    case ErrorKind::invalid_batch: return "invalid-batch";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::state: return "state";
    case ErrorKind::degenerate_class: return "degenerate-class";
    case ErrorKind::insufficient_class_data: return "insufficient-class-data";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::malformed_archive: return "malformed-archive";
    case ErrorKind::inconsistent_archive: return "inconsistent-archive";
    case ErrorKind::undefined_curve: return "undefined-curve";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

namespace {
__extension__ using u128 = unsigned __int128;
} // namespace

std::uint64_t RngStream::uniform_index(std::uint64_t bound) {
    if (bound == 0) {
        fail(ErrorKind::invalid_input, "uniform_index: bound must be positive");
    }
    // Lemire's multiply-shift with rejection; unbiased.
    u128 product = static_cast<u128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            product = static_cast<u128>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::uint64_t>(product >> 64);
}

namespace {

void write_bytes_atomic(const std::filesystem::path& path, const char* data, std::size_t size) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            fail(ErrorKind::io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
        }
    }
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorKind::io, "cannot open " + tmp.string() + " for writing");
        }
        out.write(data, static_cast<std::streamsize>(size));
        out.flush();
        if (!out) {
            fail(ErrorKind::io, "write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        fail(ErrorKind::io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

} // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    write_bytes_atomic(path, contents.data(), contents.size());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> contents) {
    write_bytes_atomic(path, reinterpret_cast<const char*>(contents.data()), contents.size());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return std::move(buffer).str();
}

} // namespace imet
