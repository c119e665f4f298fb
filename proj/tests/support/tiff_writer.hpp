// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

// Test-side TIFF writer for DNG metadata fixtures.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace wbpref::testing {

enum TiffType : std::uint16_t {
    kTByte = 1,
    kTAscii = 2,
    kTShort = 3,
    kTLong = 4,
    kTRational = 5,
    kTSRational = 10,
    kTIfd = 13,
};

struct TiffEntry {
    std::uint16_t tag = 0;
    std::uint16_t type = kTShort;
    std::vector<std::int64_t> ints;                          ///< BYTE/SHORT/LONG values
    std::vector<std::pair<std::int64_t, std::int64_t>> rats;  ///< RATIONAL/SRATIONAL values
    std::string ascii;                                       ///< ASCII payload, NUL appended
    std::vector<int> ifd_refs;                               ///< LONG/IFD values resolved to IFD offsets
};

inline TiffEntry short_entry(std::uint16_t tag, std::vector<std::int64_t> v) {
    return TiffEntry{tag, kTShort, std::move(v), {}, {}, {}};
}

inline TiffEntry ascii_entry(std::uint16_t tag, std::string s) { return TiffEntry{tag, kTAscii, {}, {}, std::move(s), {}}; }

inline TiffEntry ref_entry(std::uint16_t tag, std::vector<int> ifds, std::uint16_t type = kTLong) {
    return TiffEntry{tag, type, {}, {}, {}, std::move(ifds)};
}

/// Reals encoded with a fixed denominator; exact for values with <= 6 decimals.
inline TiffEntry rational_entry(std::uint16_t tag, const std::vector<double>& v, bool is_signed = true,
                                std::int64_t den = 1000000) {
    TiffEntry e{tag, static_cast<std::uint16_t>(is_signed ? kTSRational : kTRational), {}, {}, {}, {}};
    for (double x : v) e.rats.emplace_back(std::llround(x * static_cast<double>(den)), den);
    return e;
}

struct TiffIfd {
    std::vector<TiffEntry> entries;
    int next = -1;  ///< index of the next IFD in the chain
};

class TiffWriter {
public:
    explicit TiffWriter(bool big_endian) : be_(big_endian) {}

    int add_ifd(TiffIfd ifd) {
        ifds_.push_back(std::move(ifd));
        return static_cast<int>(ifds_.size()) - 1;
    }

    /// IFD 0 is the first IFD; each IFD is followed by its out-of-line data.
    std::vector<std::uint8_t> bytes() const {
        std::vector<std::size_t> offsets;
        std::size_t pos = 8;
        for (const auto& ifd : ifds_) {
            offsets.push_back(pos);
            pos += ifd_size(ifd);
        }
        std::vector<std::uint8_t> out;
        out.reserve(pos);
        if (be_) {
            out.push_back('M');
            out.push_back('M');
        } else {
            out.push_back('I');
            out.push_back('I');
        }
        put16(out, 42);
        put32(out, ifds_.empty() ? 0 : static_cast<std::uint32_t>(offsets[0]));
        for (std::size_t i = 0; i < ifds_.size(); ++i) write_ifd(out, ifds_[i], offsets[i], offsets);
        return out;
    }

private:
    static std::size_t type_size(std::uint16_t t) {
        switch (t) {
            case kTByte: case kTAscii: return 1;
            case kTShort: return 2;
            case kTLong: case kTIfd: return 4;
            default: return 8;
        }
    }
    static std::size_t count_of(const TiffEntry& e) {
        if (e.type == kTAscii) return e.ascii.size() + 1;
        if (e.type == kTRational || e.type == kTSRational) return e.rats.size();
        if (!e.ifd_refs.empty()) return e.ifd_refs.size();
        return e.ints.size();
    }
    static std::size_t payload(const TiffEntry& e) { return type_size(e.type) * count_of(e); }
    static std::size_t padded(std::size_t n) { return n + (n & 1); }

    static std::size_t ifd_size(const TiffIfd& ifd) {
        std::size_t n = 2 + 12 * ifd.entries.size() + 4;
        for (const auto& e : ifd.entries)
            if (payload(e) > 4) n += padded(payload(e));
        return n;
    }

    void put16(std::vector<std::uint8_t>& o, std::uint32_t v) const {
        if (be_) {
            o.push_back(static_cast<std::uint8_t>(v >> 8));
            o.push_back(static_cast<std::uint8_t>(v));
        } else {
            o.push_back(static_cast<std::uint8_t>(v));
            o.push_back(static_cast<std::uint8_t>(v >> 8));
        }
    }
    void put32(std::vector<std::uint8_t>& o, std::uint32_t v) const {
        if (be_) {
            put16(o, v >> 16);
            put16(o, v & 0xFFFF);
        } else {
            put16(o, v & 0xFFFF);
            put16(o, v >> 16);
        }
    }

    void put_values(std::vector<std::uint8_t>& o, const TiffEntry& e, const std::vector<std::size_t>& offsets) const {
        switch (e.type) {
            case kTAscii:
                for (char c : e.ascii) o.push_back(static_cast<std::uint8_t>(c));
                o.push_back(0);
                break;
            case kTRational:
            case kTSRational:
                for (const auto& [n, d] : e.rats) {
                    put32(o, static_cast<std::uint32_t>(n));
                    put32(o, static_cast<std::uint32_t>(d));
                }
                break;
            default:
                if (!e.ifd_refs.empty()) {
                    for (int r : e.ifd_refs) put32(o, static_cast<std::uint32_t>(offsets[static_cast<std::size_t>(r)]));
                    break;
                }
                for (auto v : e.ints) {
                    if (e.type == kTByte)
                        o.push_back(static_cast<std::uint8_t>(v));
                    else if (e.type == kTShort)
                        put16(o, static_cast<std::uint32_t>(v));
                    else
                        put32(o, static_cast<std::uint32_t>(v));
                }
        }
    }

    void write_ifd(std::vector<std::uint8_t>& o, const TiffIfd& ifd, std::size_t at,
                   const std::vector<std::size_t>& offsets) const {
        std::size_t data_at = at + 2 + 12 * ifd.entries.size() + 4;
        std::vector<std::uint8_t> data;
        put16(o, static_cast<std::uint32_t>(ifd.entries.size()));
        for (const auto& e : ifd.entries) {
            put16(o, e.tag);
            put16(o, e.type);
            put32(o, static_cast<std::uint32_t>(count_of(e)));
            std::vector<std::uint8_t> v;
            put_values(v, e, offsets);
            if (v.size() <= 4) {
                v.resize(4, 0);
                o.insert(o.end(), v.begin(), v.end());
            } else {
                put32(o, static_cast<std::uint32_t>(data_at + data.size()));
                data.insert(data.end(), v.begin(), v.end());
                if (data.size() & 1) data.push_back(0);
            }
        }
        put32(o, ifd.next < 0 ? 0 : static_cast<std::uint32_t>(offsets[static_cast<std::size_t>(ifd.next)]));
        o.insert(o.end(), data.begin(), data.end());
    }

    bool be_;
    std::vector<TiffIfd> ifds_;
};

}  // namespace wbpref::testing
