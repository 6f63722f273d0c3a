#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace imet::data {

/// A decoded .npy array. `dtype` is the numpy type string (e.g. "|u1", "<i8").
struct NpyArray {
    std::string dtype;
    std::vector<std::size_t> shape;
    std::vector<std::byte> bytes;

    std::size_t element_count() const noexcept;
    std::size_t item_size() const;

    /// Values widened to int64. Integer dtypes only.
    std::vector<std::int64_t> to_integers() const;

    static NpyArray from_u8(std::vector<std::size_t> shape, std::span<const std::uint8_t> values);
    static NpyArray from_i64(std::vector<std::size_t> shape, std::span<const std::int64_t> values);
};

/// Parses the .npy v1/v2/v3 container. C-order only.
NpyArray parse_npy(std::span<const std::byte> bytes);
std::vector<std::byte> encode_npy(const NpyArray& array);

/// Reads every member of an .npz (zip) archive; keys have the ".npy" suffix removed.
/// Supports stored and deflated members and zip64 size records.
std::map<std::string, NpyArray> read_npz(const std::filesystem::path& path);

/// Writes an .npz archive, deflating members when `compress` is set.
void write_npz(const std::filesystem::path& path, const std::map<std::string, NpyArray>& arrays, bool compress);

} // namespace imet::data
