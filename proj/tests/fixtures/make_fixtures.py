"""Regenerates the NPZ fixtures used by test_data. Requires numpy."""
import struct

import numpy as np


def with_zip64_central_records(src, dst):
    """Rewrites every central directory record to carry its sizes and local
    header offset in a zip64 extra field, as writers do for large members."""
    data = open(src, "rb").read()
    eocd = data.rfind(b"PK\x05\x06")
    count, cd_size, cd_offset = struct.unpack_from("<HII", data, eocd + 10)
    out_cd = b""
    pos = cd_offset
    for _ in range(count):
        fixed = bytearray(data[pos:pos + 46])
        name_len, extra_len, comment_len = struct.unpack_from("<HHH", fixed, 28)
        csize, usize = struct.unpack_from("<II", fixed, 20)
        offset = struct.unpack_from("<I", fixed, 42)[0]
        name = data[pos + 46:pos + 46 + name_len]
        extra = struct.pack("<HHQQQ", 0x0001, 24, usize, csize, offset)
        struct.pack_into("<II", fixed, 20, 0xFFFFFFFF, 0xFFFFFFFF)
        struct.pack_into("<I", fixed, 42, 0xFFFFFFFF)
        struct.pack_into("<H", fixed, 30, len(extra))
        out_cd += bytes(fixed) + name + extra
        pos += 46 + name_len + extra_len + comment_len
    tail = bytearray(data[eocd:eocd + 22])
    struct.pack_into("<I", tail, 12, len(out_cd))
    open(dst, "wb").write(data[:cd_offset] + out_cd + bytes(tail))


def arrays():
    return {
        "train_images": np.arange(5 * 4 * 3, dtype=np.uint8).reshape(5, 4, 3),
        "train_labels": np.array([[0], [1], [2], [0], [1]], dtype=np.int64),
        "val_images": (255 - np.arange(2 * 4 * 3, dtype=np.uint8)).reshape(2, 4, 3),
        "val_labels": np.array([2, 1], dtype=np.uint8),
        "test_images": np.full((3, 4, 3), 128, dtype=np.uint8),
        "test_labels": np.array([[0], [2], [1]], dtype=np.int32),
    }


if __name__ == "__main__":
    np.savez_compressed("tiny_compressed.npz", **arrays())
    np.savez("tiny_stored.npz", **arrays())
    partial = arrays()
    del partial["val_labels"]
    np.savez("missing_val_labels.npz", **partial)
    rgb = arrays()
    rgb["train_images"] = np.zeros((5, 4, 3, 3), dtype=np.uint8)
    np.savez("rgb.npz", **rgb)
    mismatch = arrays()
    mismatch["train_labels"] = mismatch["train_labels"][:4]
    np.savez("count_mismatch.npz", **mismatch)
    with_zip64_central_records("tiny_compressed.npz", "zip64_central.npz")
