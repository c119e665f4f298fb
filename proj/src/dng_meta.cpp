// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include <wbpref/dng_meta.hpp>

#include <wbpref/text_io.hpp>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <vector>

namespace wbpref::dng {

namespace {

enum TiffType : std::uint16_t {
    kByte = 1,
    kAscii = 2,
    kShort = 3,
    kLong = 4,
    kRational = 5,
    kSByte = 6,
    kUndefined = 7,
    kSShort = 8,
    kSLong = 9,
    kSRational = 10,
    kFloat = 11,
    kDouble = 12,
    kIfd = 13,
};

std::uint64_t type_size(std::uint16_t type) {
    switch (type) {
        case kByte: case kAscii: case kSByte: case kUndefined: return 1;
        case kShort: case kSShort: return 2;
        case kLong: case kSLong: case kFloat: case kIfd: return 4;
        case kRational: case kSRational: case kDouble: return 8;
        default: return 0;
    }
}

std::string hex_tag(std::uint16_t tag) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%04X", tag);
    return buf;
}

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, bool little) : b_(bytes), little_(little) {}

    std::size_t size() const noexcept { return b_.size(); }

    bool has(std::uint64_t offset, std::uint64_t len) const noexcept {
        return offset <= b_.size() && len <= b_.size() - offset;
    }

    std::uint16_t u16(std::uint64_t off) const {
        require(off, 2);
        const auto a = b_[off], c = b_[off + 1];
        return little_ ? static_cast<std::uint16_t>(a | (c << 8)) : static_cast<std::uint16_t>((a << 8) | c);
    }

    std::uint32_t u32(std::uint64_t off) const {
        require(off, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint32_t byte = b_[off + static_cast<std::uint64_t>(little_ ? 3 - i : i)];
            v = (v << 8) | byte;
        }
        return v;
    }

    std::uint8_t u8(std::uint64_t off) const {
        require(off, 1);
        return b_[off];
    }

    void require(std::uint64_t off, std::uint64_t len) const {
        if (!has(off, len))
            throw DngError(DngErrorKind::Structure,
                           "read of " + std::to_string(len) + " bytes runs past the end of the file",
                           static_cast<std::size_t>(std::min<std::uint64_t>(off, b_.size())));
    }

private:
    std::span<const std::uint8_t> b_;
    bool little_;
};

struct Entry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::uint64_t data_offset;  ///< where the value bytes start
    std::size_t entry_offset;
};

class Walker {
public:
    explicit Walker(const ByteReader& r) : r_(r) {}

    void walk(std::uint32_t offset, int depth) {
        // The chain of next-IFD links is followed iteratively; children recurse.
        while (offset != 0) {
            if (depth > kMaxIfdDepth)
                throw DngError(DngErrorKind::Structure, "IFD nesting deeper than 8", offset);
            if (!visited_.insert(offset).second)
                throw DngError(DngErrorKind::Structure, "cyclic IFD reference", offset);
            if (static_cast<int>(visited_.size()) > kMaxIfdCount)
                throw DngError(DngErrorKind::Structure, "more than 64 IFDs", offset);
            if (!r_.has(offset, 2)) throw DngError(DngErrorKind::Structure, "IFD offset out of bounds", offset);

            const std::uint16_t n = r_.u16(offset);
            const std::uint64_t entries_at = static_cast<std::uint64_t>(offset) + 2;
            if (!r_.has(entries_at, static_cast<std::uint64_t>(n) * 12 + 4))
                throw DngError(DngErrorKind::Structure, "IFD with " + std::to_string(n) + " entries is truncated",
                               offset);

            std::vector<std::uint32_t> children;
            for (std::uint16_t i = 0; i < n; ++i) {
                const std::uint64_t at = entries_at + static_cast<std::uint64_t>(i) * 12;
                Entry e{r_.u16(at), r_.u16(at + 2), r_.u32(at + 4), 0, static_cast<std::size_t>(at)};
                const std::uint64_t sz = type_size(e.type);
                if (sz == 0) continue;  // unknown field type; TIFF says skip
                const std::uint64_t total = sz * e.count;
                e.data_offset = total <= 4 ? at + 8 : r_.u32(at + 8);
                if (!r_.has(e.data_offset, total)) {
                    if (is_interesting(e.tag))
                        throw DngError(DngErrorKind::Structure, "value of tag " + hex_tag(e.tag) + " out of bounds",
                                       e.entry_offset, e.tag);
                    continue;
                }
                handle(e, children);
            }
            for (std::uint32_t child : children) walk(child, depth + 1);
            offset = r_.u32(entries_at + static_cast<std::uint64_t>(n) * 12);
        }
    }

    DngColorMetadata finish() const {
        if (!cm1_) throw DngError(DngErrorKind::MissingTag, "missing tag 0xC621 (ColorMatrix1)", std::nullopt,
                                  kTagColorMatrix1);
        if (!cm2_) throw DngError(DngErrorKind::MissingTag, "missing tag 0xC622 (ColorMatrix2)", std::nullopt,
                                  kTagColorMatrix2);
        DngColorMetadata m;
        m.color_matrix_1 = *cm1_;
        m.color_matrix_2 = *cm2_;
        m.calibration_illuminant_1 = ill1_;
        m.calibration_illuminant_2 = ill2_;
        m.as_shot_neutral = neutral_;
        m.camera_model = model_;
        return m;
    }

private:
    static bool is_interesting(std::uint16_t tag) {
        return tag == kTagColorMatrix1 || tag == kTagColorMatrix2 || tag == kTagAsShotNeutral ||
               tag == kTagCalibrationIlluminant1 || tag == kTagCalibrationIlluminant2 || tag == kTagSubIfds ||
               tag == kTagExifIfd;
    }

    double real_at(const Entry& e, std::uint32_t i) const {
        const std::uint64_t at = e.data_offset + static_cast<std::uint64_t>(i) * type_size(e.type);
        switch (e.type) {
            case kShort: return r_.u16(at);
            case kLong: return r_.u32(at);
            case kSShort: return static_cast<std::int16_t>(r_.u16(at));
            case kSLong: return static_cast<std::int32_t>(r_.u32(at));
            case kRational: {
                const std::uint32_t num = r_.u32(at), den = r_.u32(at + 4);
                if (den == 0) throw malformed(e, "zero denominator");
                return static_cast<double>(num) / static_cast<double>(den);
            }
            case kSRational: {
                const auto num = static_cast<std::int32_t>(r_.u32(at));
                const auto den = static_cast<std::int32_t>(r_.u32(at + 4));
                if (den == 0) throw malformed(e, "zero denominator");
                return static_cast<double>(num) / static_cast<double>(den);
            }
            default: throw malformed(e, "unexpected field type " + std::to_string(e.type));
        }
    }

    std::uint32_t uint_at(const Entry& e, std::uint32_t i) const {
        const std::uint64_t at = e.data_offset + static_cast<std::uint64_t>(i) * type_size(e.type);
        switch (e.type) {
            case kShort: return r_.u16(at);
            case kLong: case kIfd: return r_.u32(at);
            default: throw malformed(e, "expected an integer field, got type " + std::to_string(e.type));
        }
    }

    DngError malformed(const Entry& e, const std::string& why) const {
        return DngError(DngErrorKind::MalformedTag, "malformed tag " + hex_tag(e.tag) + ": " + why, e.entry_offset,
                        e.tag);
    }

    Mat3 matrix(const Entry& e) const {
        if ((e.type != kSRational && e.type != kRational) || e.count != 9)
            throw malformed(e, "expected 9 rationals");
        Mat3 m;
        for (std::uint32_t i = 0; i < 9; ++i) m.m[i] = real_at(e, i);
        return m;
    }

    void handle(const Entry& e, std::vector<std::uint32_t>& children) {
        switch (e.tag) {
            case kTagColorMatrix1:
                if (!cm1_) cm1_ = matrix(e);
                break;
            case kTagColorMatrix2:
                if (!cm2_) cm2_ = matrix(e);
                break;
            case kTagAsShotNeutral: {
                if (neutral_) break;
                if (e.count != 3) throw malformed(e, "expected 3 values");
                Vec3 v{};
                for (std::uint32_t i = 0; i < 3; ++i) {
                    v[i] = real_at(e, i);
                    if (!(v[i] > 0.0)) throw malformed(e, "AsShotNeutral components must be positive");
                }
                neutral_ = v;
                break;
            }
            case kTagCalibrationIlluminant1:
            case kTagCalibrationIlluminant2: {
                auto& slot = e.tag == kTagCalibrationIlluminant1 ? ill1_ : ill2_;
                if (slot) break;
                if (e.count != 1) throw malformed(e, "expected a single value");
                slot = static_cast<int>(uint_at(e, 0));
                break;
            }
            case kTagModel: {
                if (model_ || e.type != kAscii) break;
                std::string s;
                for (std::uint32_t i = 0; i < e.count; ++i) {
                    const char c = static_cast<char>(r_.u8(e.data_offset + i));
                    if (c == '\0') break;
                    s.push_back(c);
                }
                model_ = s;
                break;
            }
            case kTagSubIfds:
                for (std::uint32_t i = 0; i < e.count && i < kMaxIfdCount; ++i) children.push_back(uint_at(e, i));
                break;
            case kTagExifIfd:
                if (e.count >= 1) children.push_back(uint_at(e, 0));
                break;
            default:
                break;
        }
    }

    const ByteReader& r_;
    std::set<std::uint32_t> visited_;
    std::optional<Mat3> cm1_, cm2_;
    std::optional<int> ill1_, ill2_;
    std::optional<Vec3> neutral_;
    std::optional<std::string> model_;
};

}  // namespace

DngColorMetadata parse_dng_metadata(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw DngError(DngErrorKind::NotTiff, "file too short for a TIFF header", 0);
    bool little = false;
    if (bytes[0] == 'I' && bytes[1] == 'I')
        little = true;
    else if (bytes[0] == 'M' && bytes[1] == 'M')
        little = false;
    else
        throw DngError(DngErrorKind::NotTiff, "bad TIFF byte-order marker", 0);
    const ByteReader r(bytes, little);
    if (r.u16(2) != 42) throw DngError(DngErrorKind::NotTiff, "bad TIFF magic number", 2);
    const std::uint32_t ifd0 = r.u32(4);
    if (ifd0 == 0) throw DngError(DngErrorKind::Structure, "TIFF has no IFD0", 4);

    Walker w(r);
    w.walk(ifd0, 0);
    return w.finish();
}

Cct calibration_illuminant_cct(int code) {
    switch (code) {
        case 17: return Cct::from_kelvin(2856.0);  // Standard light A
        case 18: return Cct::from_kelvin(4874.0);  // Standard light B
        case 19: return Cct::from_kelvin(6774.0);  // Standard light C
        case 20: return Cct::from_kelvin(5503.0);  // D55
        case 21: return Cct::from_kelvin(6504.0);  // D65
        case 22: return Cct::from_kelvin(7504.0);  // D75
        case 23: return Cct::from_kelvin(5003.0);  // D50
        case 24: return Cct::from_kelvin(3200.0);  // ISO studio tungsten
        default: throw UnsupportedIlluminantError(code);
    }
}

CameraProfile profile_from_dng(const DngColorMetadata& meta, const std::string& sensor_name) {
    if (!meta.calibration_illuminant_1)
        throw DngError(DngErrorKind::MissingTag, "missing tag 0xC65A (CalibrationIlluminant1)", std::nullopt,
                       kTagCalibrationIlluminant1);
    if (!meta.calibration_illuminant_2)
        throw DngError(DngErrorKind::MissingTag, "missing tag 0xC65B (CalibrationIlluminant2)", std::nullopt,
                       kTagCalibrationIlluminant2);
    return CameraProfile(sensor_name, meta.color_matrix_1, meta.color_matrix_2,
                         calibration_illuminant_cct(*meta.calibration_illuminant_1),
                         calibration_illuminant_cct(*meta.calibration_illuminant_2));
}

std::string describe(const DngColorMetadata& meta) {
    std::ostringstream os;
    auto mat = [&](const char* name, const Mat3& m) {
        os << name << ":\n";
        for (int r = 0; r < 3; ++r)
            os << "  " << text::format_fixed(m(r, 0), 6) << ' ' << text::format_fixed(m(r, 1), 6) << ' '
               << text::format_fixed(m(r, 2), 6) << '\n';
    };
    os << "Model: " << meta.camera_model.value_or("(absent)") << '\n';
    mat("ColorMatrix1", meta.color_matrix_1);
    mat("ColorMatrix2", meta.color_matrix_2);
    auto ill = [&](const char* name, const std::optional<int>& code) {
        os << name << ": ";
        if (!code) {
            os << "(absent)\n";
            return;
        }
        os << *code;
        try {
            os << " (" << text::format_fixed(calibration_illuminant_cct(*code).kelvin(), 0) << " K)";
        } catch (const UnsupportedIlluminantError&) {
            os << " (unsupported)";
        }
        os << '\n';
    };
    ill("CalibrationIlluminant1", meta.calibration_illuminant_1);
    ill("CalibrationIlluminant2", meta.calibration_illuminant_2);
    os << "AsShotNeutral: ";
    if (meta.as_shot_neutral)
        os << text::format_real((*meta.as_shot_neutral)[0]) << ' ' << text::format_real((*meta.as_shot_neutral)[1])
           << ' ' << text::format_real((*meta.as_shot_neutral)[2]) << '\n';
    else
        os << "(absent)\n";
    return os.str();
}

}  // namespace wbpref::dng
