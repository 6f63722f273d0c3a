#include "imet/data/npz.hpp"

#include "imet/common/atomic_file.hpp"
#include "imet/common/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <numeric>

namespace imet::data {

namespace {

[[noreturn]] void malformed(const std::string& what) { fail(ErrorKind::malformed_archive, what); }

std::uint64_t read_le(std::span<const std::byte> bytes, std::size_t offset, std::size_t width) {
    if (offset + width > bytes.size()) {
        malformed("unexpected end of data");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
        v |= static_cast<std::uint64_t>(std::to_integer<unsigned>(bytes[offset + i])) << (8 * i);
    }
    return v;
}

void put_le(std::vector<std::byte>& out, std::uint64_t value, std::size_t width) {
    for (std::size_t i = 0; i < width; ++i) {
        out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xffU));
    }
}

std::uint32_t crc_of(std::span<const std::byte> data) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t offset = 0;
    while (offset < data.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - offset, 1U << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + offset), chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::byte> inflate_raw(std::span<const std::byte> compressed, std::size_t expected_size) {
    std::vector<std::byte> out(expected_size);
    z_stream stream{};
    if (inflateInit2(&stream, -MAX_WBITS) != Z_OK) {
        malformed("zlib inflateInit2 failed");
    }
    stream.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(compressed.data()));
    stream.avail_in = static_cast<uInt>(compressed.size());
    stream.next_out = reinterpret_cast<Bytef*>(out.data());
    stream.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&stream, Z_FINISH);
    const auto produced = stream.total_out;
    inflateEnd(&stream);
    if (rc != Z_STREAM_END || produced != expected_size) {
        malformed("deflate stream is corrupt or has the wrong length");
    }
    return out;
}

std::vector<std::byte> deflate_raw(std::span<const std::byte> data) {
    z_stream stream{};
    if (deflateInit2(&stream, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        fail(ErrorKind::io, "zlib deflateInit2 failed");
    }
    std::vector<std::byte> out(deflateBound(&stream, static_cast<uLong>(data.size())));
    stream.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(data.data()));
    stream.avail_in = static_cast<uInt>(data.size());
    stream.next_out = reinterpret_cast<Bytef*>(out.data());
    stream.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&stream, Z_FINISH);
    out.resize(stream.total_out);
    deflateEnd(&stream);
    if (rc != Z_STREAM_END) {
        fail(ErrorKind::io, "zlib deflate failed");
    }
    return out;
}

bool is_integer_dtype(char kind) { return kind == 'u' || kind == 'i' || kind == 'b'; }

std::string header_value(const std::string& header, const std::string& key) {
    const auto pos = header.find("'" + key + "'");
    if (pos == std::string::npos) {
        malformed("npy header lacks '" + key + "'");
    }
    auto colon = header.find(':', pos);
    if (colon == std::string::npos) {
        malformed("npy header is malformed");
    }
    ++colon;
    while (colon < header.size() && header[colon] == ' ') {
        ++colon;
    }
    if (header[colon] == '(') {
        const auto close = header.find(')', colon);
        if (close == std::string::npos) {
            malformed("npy header shape is unterminated");
        }
        return header.substr(colon, close - colon + 1);
    }
    if (header[colon] == '\'') {
        const auto close = header.find('\'', colon + 1);
        if (close == std::string::npos) {
            malformed("npy header string is unterminated");
        }
        return header.substr(colon + 1, close - colon - 1);
    }
    const auto end = header.find_first_of(",}", colon);
    return header.substr(colon, end - colon);
}

std::vector<std::size_t> parse_shape(const std::string& tuple) {
    std::vector<std::size_t> shape;
    std::size_t i = 1;
    while (i < tuple.size()) {
        while (i < tuple.size() && (tuple[i] == ' ' || tuple[i] == ',')) {
            ++i;
        }
        if (i >= tuple.size() || tuple[i] == ')') {
            break;
        }
        std::size_t value = 0;
        bool any = false;
        while (i < tuple.size() && tuple[i] >= '0' && tuple[i] <= '9') {
            value = value * 10 + static_cast<std::size_t>(tuple[i] - '0');
            any = true;
            ++i;
        }
        if (!any) {
            malformed("npy shape '" + tuple + "' is not a tuple of integers");
        }
        shape.push_back(value);
    }
    return shape;
}

} // namespace

std::size_t NpyArray::element_count() const noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t NpyArray::item_size() const {
    if (dtype.size() < 3) {
        malformed("unsupported dtype '" + dtype + "'");
    }
    return static_cast<std::size_t>(std::stoul(dtype.substr(2)));
}

std::vector<std::int64_t> NpyArray::to_integers() const {
    if (dtype.size() < 3 || !is_integer_dtype(dtype[1]) || dtype[0] == '>') {
        malformed("expected a little-endian integer array, got dtype '" + dtype + "'");
    }
    const std::size_t width = item_size();
    if (width != 1 && width != 2 && width != 4 && width != 8) {
        malformed("unsupported integer width in dtype '" + dtype + "'");
    }
    const std::size_t n = element_count();
    if (bytes.size() != n * width) {
        malformed("array payload size does not match its shape");
    }
    const bool is_signed = dtype[1] == 'i';
    std::vector<std::int64_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t raw = read_le(bytes, i * width, width);
        if (is_signed && width < 8 && (raw >> (8 * width - 1)) != 0U) {
            raw |= ~std::uint64_t{0} << (8 * width);
        }
        out[i] = static_cast<std::int64_t>(raw);
    }
    return out;
}

NpyArray NpyArray::from_u8(std::vector<std::size_t> shape, std::span<const std::uint8_t> values) {
    NpyArray a{"|u1", std::move(shape), {}};
    a.bytes.resize(values.size());
    std::memcpy(a.bytes.data(), values.data(), values.size());
    return a;
}

NpyArray NpyArray::from_i64(std::vector<std::size_t> shape, std::span<const std::int64_t> values) {
    NpyArray a{"<i8", std::move(shape), {}};
    for (auto v : values) {
        put_le(a.bytes, static_cast<std::uint64_t>(v), 8);
    }
    return a;
}

NpyArray parse_npy(std::span<const std::byte> bytes) {
    static constexpr unsigned char kMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
    if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        malformed("member is not an npy array");
    }
    const auto major = std::to_integer<unsigned>(bytes[6]);
    std::size_t header_len = 0;
    std::size_t header_start = 0;
    if (major == 1) {
        header_len = read_le(bytes, 8, 2);
        header_start = 10;
    } else if (major == 2 || major == 3) {
        header_len = read_le(bytes, 8, 4);
        header_start = 12;
    } else {
        malformed("unsupported npy version " + std::to_string(major));
    }
    if (header_start + header_len > bytes.size()) {
        malformed("npy header overruns the member");
    }
    const std::string header(reinterpret_cast<const char*>(bytes.data() + header_start), header_len);

    NpyArray array;
    array.dtype = header_value(header, "descr");
    if (header_value(header, "fortran_order").find("True") != std::string::npos) {
        malformed("fortran-ordered arrays are not supported");
    }
    array.shape = parse_shape(header_value(header, "shape"));
    if (array.dtype.size() < 3) {
        malformed("unsupported dtype '" + array.dtype + "'");
    }
    const std::size_t payload = array.element_count() * array.item_size();
    const std::size_t data_start = header_start + header_len;
    if (bytes.size() - data_start != payload) {
        malformed("npy payload is " + std::to_string(bytes.size() - data_start) + " bytes, shape implies " +
                  std::to_string(payload));
    }
    array.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_start), bytes.end());
    return array;
}

std::vector<std::byte> encode_npy(const NpyArray& array) {
    std::string shape = "(";
    for (std::size_t i = 0; i < array.shape.size(); ++i) {
        shape += std::to_string(array.shape[i]) + ",";
        if (i + 1 < array.shape.size()) {
            shape += " ";
        }
    }
    if (array.shape.size() > 1) {
        shape.pop_back();
    }
    shape += ")";
    std::string header = "{'descr': '" + array.dtype + "', 'fortran_order': False, 'shape': " + shape + ", }";
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');

    std::vector<std::byte> out;
    constexpr unsigned char magic[] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
    for (unsigned char c : magic) {
        out.push_back(static_cast<std::byte>(c));
    }
    put_le(out, header.size(), 2);
    for (char c : header) {
        out.push_back(static_cast<std::byte>(c));
    }
    out.insert(out.end(), array.bytes.begin(), array.bytes.end());
    return out;
}

std::map<std::string, NpyArray> read_npz(const std::filesystem::path& path) {
    const std::string file = read_file(path);
    const std::span<const std::byte> bytes(reinterpret_cast<const std::byte*>(file.data()), file.size());
    if (bytes.size() < 22) {
        malformed(path.string() + " is too small to be a zip archive");
    }

    // End of central directory record; the trailing comment can be up to 64 KiB.
    std::size_t eocd = std::string::npos;
    const std::size_t scan_floor = bytes.size() > 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
    for (std::size_t i = bytes.size() - 22 + 1; i-- > scan_floor;) {
        if (read_le(bytes, i, 4) == 0x06054b50U) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) {
        malformed(path.string() + " has no zip end-of-central-directory record");
    }
    std::uint64_t entries = read_le(bytes, eocd + 10, 2);
    std::uint64_t cd_offset = read_le(bytes, eocd + 16, 4);
    if ((entries == 0xffffU || cd_offset == 0xffffffffU) && eocd >= 20 &&
        read_le(bytes, eocd - 20, 4) == 0x07064b50U) {
        const std::uint64_t z64_eocd = read_le(bytes, eocd - 20 + 8, 8);
        if (read_le(bytes, z64_eocd, 4) != 0x06064b50U) {
            malformed(path.string() + " has a broken zip64 end record");
        }
        entries = read_le(bytes, z64_eocd + 32, 8);
        cd_offset = read_le(bytes, z64_eocd + 48, 8);
    }

    std::map<std::string, NpyArray> arrays;
    std::size_t pos = cd_offset;
    for (std::uint64_t e = 0; e < entries; ++e) {
        if (read_le(bytes, pos, 4) != 0x02014b50U) {
            malformed(path.string() + ": bad central directory entry");
        }
        const auto method = read_le(bytes, pos + 10, 2);
        const auto crc = static_cast<std::uint32_t>(read_le(bytes, pos + 16, 4));
        std::uint64_t compressed_size = read_le(bytes, pos + 20, 4);
        std::uint64_t size = read_le(bytes, pos + 24, 4);
        const auto name_len = read_le(bytes, pos + 28, 2);
        const auto extra_len = read_le(bytes, pos + 30, 2);
        const auto comment_len = read_le(bytes, pos + 32, 2);
        std::uint64_t local_offset = read_le(bytes, pos + 42, 4);
        if (pos + 46 + name_len > bytes.size()) {
            malformed(path.string() + ": truncated central directory");
        }
        std::string name(reinterpret_cast<const char*>(bytes.data() + pos + 46), name_len);

        // zip64 extended information: only the saturated fields are present, in this order.
        std::size_t extra = pos + 46 + name_len;
        const std::size_t extra_end = extra + extra_len;
        while (extra + 4 <= extra_end) {
            const auto id = read_le(bytes, extra, 2);
            const auto len = read_le(bytes, extra + 2, 2);
            if (id == 0x0001U) {
                std::size_t field = extra + 4;
                if (size == 0xffffffffU) {
                    size = read_le(bytes, field, 8);
                    field += 8;
                }
                if (compressed_size == 0xffffffffU) {
                    compressed_size = read_le(bytes, field, 8);
                    field += 8;
                }
                if (local_offset == 0xffffffffU) {
                    local_offset = read_le(bytes, field, 8);
                }
            }
            extra += 4 + len;
        }
        pos = extra_end + comment_len;

        if (read_le(bytes, local_offset, 4) != 0x04034b50U) {
            malformed(path.string() + ": bad local header for " + name);
        }
        const auto local_name_len = read_le(bytes, local_offset + 26, 2);
        const auto local_extra_len = read_le(bytes, local_offset + 28, 2);
        const std::size_t data_start = local_offset + 30 + local_name_len + local_extra_len;
        if (data_start + compressed_size > bytes.size()) {
            malformed(path.string() + ": member " + name + " overruns the archive");
        }
        const auto raw = bytes.subspan(data_start, compressed_size);

        std::vector<std::byte> member;
        if (method == 0) {
            if (compressed_size != size) {
                malformed(path.string() + ": stored member " + name + " has inconsistent sizes");
            }
            member.assign(raw.begin(), raw.end());
        } else if (method == 8) {
            member = inflate_raw(raw, size);
        } else {
            malformed(path.string() + ": member " + name + " uses unsupported compression " + std::to_string(method));
        }
        if (crc_of(member) != crc) {
            malformed(path.string() + ": CRC mismatch in " + name);
        }
        if (name.size() > 4 && name.ends_with(".npy")) {
            name.resize(name.size() - 4);
        }
        arrays.emplace(name, parse_npy(member));
    }
    return arrays;
}

void write_npz(const std::filesystem::path& path, const std::map<std::string, NpyArray>& arrays, bool compress) {
    std::vector<std::byte> out;
    std::vector<std::byte> central;
    std::uint64_t count = 0;
    for (const auto& [key, array] : arrays) {
        const std::string name = key + ".npy";
        const auto member = encode_npy(array);
        const auto payload = compress ? deflate_raw(member) : member;
        if (payload.size() >= 0xffffffffU || member.size() >= 0xffffffffU || out.size() >= 0xffffffffU) {
            fail(ErrorKind::io, "write_npz does not emit zip64 members");
        }
        const std::uint32_t crc = crc_of(member);
        const std::uint16_t method = compress ? 8 : 0;
        const std::size_t local_offset = out.size();

        put_le(out, 0x04034b50U, 4);
        put_le(out, 20, 2); // version needed
        put_le(out, 0, 2);  // flags
        put_le(out, method, 2);
        put_le(out, 0, 2); // mod time
        put_le(out, 0x21, 2); // mod date 1980-01-01
        put_le(out, crc, 4);
        put_le(out, payload.size(), 4);
        put_le(out, member.size(), 4);
        put_le(out, name.size(), 2);
        put_le(out, 0, 2);
        for (char c : name) {
            out.push_back(static_cast<std::byte>(c));
        }
        out.insert(out.end(), payload.begin(), payload.end());

        put_le(central, 0x02014b50U, 4);
        put_le(central, 20, 2); // version made by
        put_le(central, 20, 2);
        put_le(central, 0, 2);
        put_le(central, method, 2);
        put_le(central, 0, 2);
        put_le(central, 0x21, 2);
        put_le(central, crc, 4);
        put_le(central, payload.size(), 4);
        put_le(central, member.size(), 4);
        put_le(central, name.size(), 2);
        put_le(central, 0, 2); // extra
        put_le(central, 0, 2); // comment
        put_le(central, 0, 2); // disk
        put_le(central, 0, 2); // internal attrs
        put_le(central, 0, 4); // external attrs
        put_le(central, local_offset, 4);
        for (char c : name) {
            central.push_back(static_cast<std::byte>(c));
        }
        ++count;
    }
    const std::size_t cd_offset = out.size();
    out.insert(out.end(), central.begin(), central.end());
    put_le(out, 0x06054b50U, 4);
    put_le(out, 0, 2);
    put_le(out, 0, 2);
    put_le(out, count, 2);
    put_le(out, count, 2);
    put_le(out, central.size(), 4);
    put_le(out, cd_offset, 4);
    put_le(out, 0, 2);
    write_file_atomic(path, out);
}

} // namespace imet::data
