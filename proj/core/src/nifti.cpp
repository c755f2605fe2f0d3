#include "pelvseg/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>

#include <fmt/format.h>
#include <zlib.h>

#include "pelvseg/error.hpp"

namespace pelvseg::nifti {

namespace {

constexpr std::uint8_t kGzipMagic0 = 0x1f;
constexpr std::uint8_t kGzipMagic1 = 0x8b;
constexpr std::array<char, 4> kSingleFileMagic{'n', '+', '1', '\0'};
constexpr std::array<char, 4> kPairedMagic{'n', 'i', '1', '\0'};

template <typename T>
T byteswap(T value) {
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), &value, sizeof(T));
    std::reverse(raw.begin(), raw.end());
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
}

bool needs_swap(Endian e) {
    return (e == Endian::Big) != (std::endian::native == std::endian::big);
}

// Fixed-offset field access over the 348 header bytes.
class HeaderReader {
public:
    HeaderReader(std::span<const std::uint8_t> bytes, Endian endian) : bytes_(bytes), swap_(needs_swap(endian)) {}

    template <typename T>
    T get(std::size_t offset) const {
        T value;
        std::memcpy(&value, bytes_.data() + offset, sizeof(T));
        return swap_ ? byteswap(value) : value;
    }

    template <typename T, std::size_t N>
    std::array<T, N> get_array(std::size_t offset) const {
        std::array<T, N> out{};
        for (std::size_t n = 0; n < N; ++n) {
            out[n] = get<T>(offset + n * sizeof(T));
        }
        return out;
    }

    template <std::size_t N>
    std::array<char, N> get_chars(std::size_t offset) const {
        std::array<char, N> out{};
        std::memcpy(out.data(), bytes_.data() + offset, N);
        return out;
    }

private:
    std::span<const std::uint8_t> bytes_;
    bool swap_;
};

class HeaderWriter {
public:
    explicit HeaderWriter(Endian endian) : swap_(needs_swap(endian)) {}

    template <typename T>
    void put(std::size_t offset, T value) {
        if (swap_) {
            value = byteswap(value);
        }
        std::memcpy(bytes_.data() + offset, &value, sizeof(T));
    }

    template <typename T, std::size_t N>
    void put_array(std::size_t offset, const std::array<T, N>& values) {
        for (std::size_t n = 0; n < N; ++n) {
            put<T>(offset + n * sizeof(T), values[n]);
        }
    }

    template <std::size_t N>
    void put_chars(std::size_t offset, const std::array<char, N>& chars) {
        std::memcpy(bytes_.data() + offset, chars.data(), N);
    }

    const std::array<std::uint8_t, kHeaderSize>& bytes() const { return bytes_; }

private:
    std::array<std::uint8_t, kHeaderSize> bytes_{};
    bool swap_;
};

Header parse_fields(std::span<const std::uint8_t> bytes, Endian endian) {
    const HeaderReader r(bytes, endian);
    Header h;
    h.sizeof_hdr = r.get<std::int32_t>(0);
    h.data_type = r.get_chars<10>(4);
    h.db_name = r.get_chars<18>(14);
    h.extents = r.get<std::int32_t>(32);
    h.session_error = r.get<std::int16_t>(36);
    h.regular = r.get<char>(38);
    h.dim_info = r.get<std::uint8_t>(39);
    h.dim = r.get_array<std::int16_t, 8>(40);
    h.intent_p1 = r.get<float>(56);
    h.intent_p2 = r.get<float>(60);
    h.intent_p3 = r.get<float>(64);
    h.intent_code = r.get<std::int16_t>(68);
    h.datatype = r.get<std::int16_t>(70);
    h.bitpix = r.get<std::int16_t>(72);
    h.slice_start = r.get<std::int16_t>(74);
    h.pixdim = r.get_array<float, 8>(76);
    h.vox_offset = r.get<float>(108);
    h.scl_slope = r.get<float>(112);
    h.scl_inter = r.get<float>(116);
    h.slice_end = r.get<std::int16_t>(120);
    h.slice_code = r.get<std::uint8_t>(122);
    h.xyzt_units = r.get<std::uint8_t>(123);
    h.cal_max = r.get<float>(124);
    h.cal_min = r.get<float>(128);
    h.slice_duration = r.get<float>(132);
    h.toffset = r.get<float>(136);
    h.glmax = r.get<std::int32_t>(140);
    h.glmin = r.get<std::int32_t>(144);
    h.descrip = r.get_chars<80>(148);
    h.aux_file = r.get_chars<24>(228);
    h.qform_code = r.get<std::int16_t>(252);
    h.sform_code = r.get<std::int16_t>(254);
    h.quatern_b = r.get<float>(256);
    h.quatern_c = r.get<float>(260);
    h.quatern_d = r.get<float>(264);
    h.qoffset_x = r.get<float>(268);
    h.qoffset_y = r.get<float>(272);
    h.qoffset_z = r.get<float>(276);
    h.srow_x = r.get_array<float, 4>(280);
    h.srow_y = r.get_array<float, 4>(296);
    h.srow_z = r.get_array<float, 4>(312);
    h.intent_name = r.get_chars<16>(328);
    h.magic = r.get_chars<4>(344);
    return h;
}

int expected_bitpix(std::int16_t datatype) {
    switch (static_cast<Datatype>(datatype)) {
    case Datatype::Uint8:
    case Datatype::Int8: return 8;
    case Datatype::Int16:
    case Datatype::Uint16: return 16;
    case Datatype::Int32:
    case Datatype::Uint32:
    case Datatype::Float32: return 32;
    case Datatype::Float64:
    case Datatype::Int64:
    case Datatype::Uint64: return 64;
    }
    return 0;
}

bool label_datatype(std::int16_t datatype) {
    switch (static_cast<Datatype>(datatype)) {
    case Datatype::Uint8:
    case Datatype::Int16:
    case Datatype::Uint16:
    case Datatype::Int32:
    case Datatype::Float32: return true;
    default: return false;
    }
}

Dims dims_of(const Header& h) {
    const int rank = h.dim[0];
    for (int d = 1; d <= 3; ++d) {
        if (h.dim[d] < 1) {
            throw Error(ErrorCode::NotNifti, fmt::format("dim[{}] = {} must be positive", d, h.dim[d]));
        }
    }
    if (rank < 3) {
        throw Error(ErrorCode::UnsupportedShape, fmt::format("rank {} volume, expected 3", rank));
    }
    for (int d = 4; d <= rank; ++d) {
        if (h.dim[d] != 1) {
            throw Error(ErrorCode::UnsupportedShape, fmt::format("dim[{}] = {}, trailing dims must be 1", d, h.dim[d]));
        }
    }
    return {static_cast<std::size_t>(h.dim[1]), static_cast<std::size_t>(h.dim[2]), static_cast<std::size_t>(h.dim[3])};
}

Spacing spacing_of(const Header& h) {
    const Spacing s{h.pixdim[1], h.pixdim[2], h.pixdim[3]};
    for (int a = 0; a < 3; ++a) {
        if (!(s[a] > 0.0F) || !std::isfinite(s[a])) {
            throw Error(ErrorCode::NotNifti, fmt::format("pixdim[{}] = {} must be positive", a + 1, s[a]));
        }
    }
    return s;
}

struct GzCloser {
    void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

bool sniff_gzip(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
    }
    std::array<char, 2> lead{};
    in.read(lead.data(), 2);
    return in.gcount() == 2 && static_cast<std::uint8_t>(lead[0]) == kGzipMagic0 &&
           static_cast<std::uint8_t>(lead[1]) == kGzipMagic1;
}

// Reads through zlib, which passes uncompressed files through unchanged.
class Source {
public:
    explicit Source(const std::filesystem::path& path) : path_(path), gzipped_(sniff_gzip(path)) {
        handle_.reset(gzopen(path.c_str(), "rb"));
        if (!handle_) {
            throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
        }
    }

    bool gzipped() const { return gzipped_; }

    std::size_t read(std::uint8_t* out, std::size_t n) {
        std::size_t done = 0;
        while (done < n) {
            const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n - done, 1U << 30));
            const int got = gzread(handle_.get(), out + done, chunk);
            if (got < 0) {
                int errnum = 0;
                const char* msg = gzerror(handle_.get(), &errnum);
                throw Error(ErrorCode::IoError, fmt::format("{}: {}", path_.string(), msg));
            }
            if (got == 0) {
                break;
            }
            done += static_cast<std::size_t>(got);
        }
        return done;
    }

    void skip(std::size_t n) {
        std::vector<std::uint8_t> sink(n);
        if (read(sink.data(), n) != n) {
            throw Error(ErrorCode::NotNifti, fmt::format("{}: truncated before vox_offset", path_.string()));
        }
    }

private:
    std::filesystem::path path_;
    bool gzipped_;
    GzHandle handle_;
};

struct OpenedHeader {
    DecodedHeader decoded;
    HeaderSummary summary;
};

OpenedHeader open_header(Source& src, const std::filesystem::path& path) {
    std::array<std::uint8_t, kHeaderSize> raw{};
    if (src.read(raw.data(), raw.size()) != raw.size()) {
        throw Error(ErrorCode::NotNifti, fmt::format("{}: shorter than {} bytes", path.string(), kHeaderSize));
    }
    OpenedHeader out{decode_header(raw), {}};
    const Header& h = out.decoded.header;
    out.summary.dims = dims_of(h);
    out.summary.spacing = spacing_of(h);
    out.summary.datatype = h.datatype;
    out.summary.datatype_name = datatype_name(h.datatype);
    out.summary.endian = out.decoded.endian;
    out.summary.gzipped = src.gzipped();
    return out;
}

template <typename T>
void decode_integers(std::span<const std::uint8_t> payload, bool swap, const LabelMapping* mapping,
                     std::vector<Label>& out) {
    for (std::size_t n = 0; n < out.size(); ++n) {
        T v;
        std::memcpy(&v, payload.data() + n * sizeof(T), sizeof(T));
        if (swap) {
            v = byteswap(v);
        }
        out[n] = map_label(static_cast<std::int64_t>(v), mapping);
    }
}

void decode_floats(std::span<const std::uint8_t> payload, bool swap, const LabelMapping* mapping,
                   std::vector<Label>& out) {
    constexpr double kIntegralTolerance = 1e-6;
    for (std::size_t n = 0; n < out.size(); ++n) {
        float v;
        std::memcpy(&v, payload.data() + n * sizeof(float), sizeof(float));
        if (swap) {
            v = byteswap(v);
        }
        const double rounded = std::round(static_cast<double>(v));
        if (!std::isfinite(v) || std::abs(static_cast<double>(v) - rounded) > kIntegralTolerance) {
            throw Error(ErrorCode::NonIntegralLabels, fmt::format("value {} at offset {}", v, n));
        }
        out[n] = map_label(static_cast<std::int64_t>(rounded), mapping);
    }
}

class Sink {
public:
    Sink(const std::filesystem::path& path, bool gzip) : path_(path), gzip_(gzip) {
        if (gzip_) {
            gz_.reset(gzopen(path.c_str(), "wb9"));
            if (!gz_) {
                throw Error(ErrorCode::IoError, fmt::format("cannot create {}", path.string()));
            }
        } else {
            plain_.open(path, std::ios::binary | std::ios::trunc);
            if (!plain_) {
                throw Error(ErrorCode::IoError, fmt::format("cannot create {}", path.string()));
            }
        }
    }

    void write(std::span<const std::uint8_t> bytes) {
        if (gzip_) {
            std::size_t done = 0;
            while (done < bytes.size()) {
                const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1U << 30));
                if (gzwrite(gz_.get(), bytes.data() + done, chunk) != static_cast<int>(chunk)) {
                    throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path_.string()));
                }
                done += chunk;
            }
        } else {
            plain_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            if (!plain_) {
                throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path_.string()));
            }
        }
    }

    void close() {
        if (gzip_) {
            if (gzclose(gz_.release()) != Z_OK) {
                throw Error(ErrorCode::IoError, fmt::format("close failed: {}", path_.string()));
            }
        } else {
            plain_.close();
            if (!plain_) {
                throw Error(ErrorCode::IoError, fmt::format("close failed: {}", path_.string()));
            }
        }
    }

private:
    std::filesystem::path path_;
    bool gzip_;
    GzHandle gz_;
    std::ofstream plain_;
};

} // namespace

std::string datatype_name(std::int16_t code) {
    switch (static_cast<Datatype>(code)) {
    case Datatype::Uint8: return "uint8";
    case Datatype::Int16: return "int16";
    case Datatype::Int32: return "int32";
    case Datatype::Float32: return "float32";
    case Datatype::Float64: return "float64";
    case Datatype::Int8: return "int8";
    case Datatype::Uint16: return "uint16";
    case Datatype::Uint32: return "uint32";
    case Datatype::Int64: return "int64";
    case Datatype::Uint64: return "uint64";
    }
    return fmt::format("code{}", code);
}

DecodedHeader decode_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < static_cast<std::size_t>(kHeaderSize)) {
        throw Error(ErrorCode::NotNifti, fmt::format("header has {} bytes, need {}", bytes.size(), kHeaderSize));
    }
    const auto header_bytes = bytes.first(kHeaderSize);

    // sizeof_hdr must read 348 and dim[0] must be a plausible rank in the
    // chosen byte order.
    std::optional<Endian> endian;
    for (const Endian candidate : {Endian::Little, Endian::Big}) {
        const HeaderReader r(header_bytes, candidate);
        const auto rank = r.get<std::int16_t>(40);
        if (r.get<std::int32_t>(0) == kHeaderSize && rank >= 1 && rank <= 7) {
            endian = candidate;
            break;
        }
    }
    if (!endian) {
        throw Error(ErrorCode::NotNifti, "sizeof_hdr/dim[0] invalid in both byte orders");
    }

    DecodedHeader out{parse_fields(header_bytes, *endian), *endian};
    const Header& h = out.header;
    if (h.magic == kPairedMagic) {
        throw Error(ErrorCode::NotNifti, "paired .hdr/.img files are not supported");
    }
    if (h.magic != kSingleFileMagic) {
        throw Error(ErrorCode::NotNifti, "magic is not \"n+1\"");
    }
    if (!(h.vox_offset >= static_cast<float>(kHeaderSize)) || h.vox_offset != std::floor(h.vox_offset)) {
        throw Error(ErrorCode::NotNifti, fmt::format("vox_offset {} invalid", h.vox_offset));
    }
    return out;
}

std::array<std::uint8_t, kHeaderSize> encode_header(const Header& h, Endian endian) {
    HeaderWriter w(endian);
    w.put<std::int32_t>(0, h.sizeof_hdr);
    w.put_chars(4, h.data_type);
    w.put_chars(14, h.db_name);
    w.put<std::int32_t>(32, h.extents);
    w.put<std::int16_t>(36, h.session_error);
    w.put<char>(38, h.regular);
    w.put<std::uint8_t>(39, h.dim_info);
    w.put_array(40, h.dim);
    w.put<float>(56, h.intent_p1);
    w.put<float>(60, h.intent_p2);
    w.put<float>(64, h.intent_p3);
    w.put<std::int16_t>(68, h.intent_code);
    w.put<std::int16_t>(70, h.datatype);
    w.put<std::int16_t>(72, h.bitpix);
    w.put<std::int16_t>(74, h.slice_start);
    w.put_array(76, h.pixdim);
    w.put<float>(108, h.vox_offset);
    w.put<float>(112, h.scl_slope);
    w.put<float>(116, h.scl_inter);
    w.put<std::int16_t>(120, h.slice_end);
    w.put<std::uint8_t>(122, h.slice_code);
    w.put<std::uint8_t>(123, h.xyzt_units);
    w.put<float>(124, h.cal_max);
    w.put<float>(128, h.cal_min);
    w.put<float>(132, h.slice_duration);
    w.put<float>(136, h.toffset);
    w.put<std::int32_t>(140, h.glmax);
    w.put<std::int32_t>(144, h.glmin);
    w.put_chars(148, h.descrip);
    w.put_chars(228, h.aux_file);
    w.put<std::int16_t>(252, h.qform_code);
    w.put<std::int16_t>(254, h.sform_code);
    w.put<float>(256, h.quatern_b);
    w.put<float>(260, h.quatern_c);
    w.put<float>(264, h.quatern_d);
    w.put<float>(268, h.qoffset_x);
    w.put<float>(272, h.qoffset_y);
    w.put<float>(276, h.qoffset_z);
    w.put_array(280, h.srow_x);
    w.put_array(296, h.srow_y);
    w.put_array(312, h.srow_z);
    w.put_chars(328, h.intent_name);
    w.put_chars(344, h.magic);
    return w.bytes();
}

Orientation orientation_of(const Header& h) {
    Orientation o;
    o.qfac = h.pixdim[0];
    o.xyzt_units = h.xyzt_units;
    o.qform_code = h.qform_code;
    o.sform_code = h.sform_code;
    o.quatern_b = h.quatern_b;
    o.quatern_c = h.quatern_c;
    o.quatern_d = h.quatern_d;
    o.qoffset_x = h.qoffset_x;
    o.qoffset_y = h.qoffset_y;
    o.qoffset_z = h.qoffset_z;
    o.srow_x = h.srow_x;
    o.srow_y = h.srow_y;
    o.srow_z = h.srow_z;
    return o;
}

HeaderSummary inspect_header(const std::filesystem::path& path) {
    Source src(path);
    return open_header(src, path).summary;
}

LabelImage read_label_image(const std::filesystem::path& path, const ReadOptions& options) {
    Source src(path);
    const auto [decoded, summary] = open_header(src, path);
    const Header& h = decoded.header;

    if (!label_datatype(h.datatype)) {
        throw Error(ErrorCode::UnsupportedDatatype, fmt::format("{}: datatype {}", path.string(), datatype_name(h.datatype)));
    }
    if (h.bitpix != expected_bitpix(h.datatype)) {
        throw Error(ErrorCode::NotNifti, fmt::format("{}: bitpix {} inconsistent with {}", path.string(), h.bitpix,
                                                     datatype_name(h.datatype)));
    }
    if ((h.scl_slope != 0.0F && h.scl_slope != 1.0F) || h.scl_inter != 0.0F) {
        throw Error(ErrorCode::ScaledLabels,
                    fmt::format("{}: scl_slope {} scl_inter {}", path.string(), h.scl_slope, h.scl_inter));
    }

    src.skip(static_cast<std::size_t>(h.vox_offset) - kHeaderSize);
    const std::size_t voxels = summary.dims.voxel_count();
    const std::size_t bytes_per_voxel = static_cast<std::size_t>(h.bitpix) / 8;
    std::vector<std::uint8_t> payload(voxels * bytes_per_voxel);
    if (src.read(payload.data(), payload.size()) != payload.size()) {
        throw Error(ErrorCode::NotNifti, fmt::format("{}: voxel data truncated", path.string()));
    }

    const bool swap = needs_swap(decoded.endian);
    const LabelMapping* mapping = options.relabel ? &*options.relabel : nullptr;
    std::vector<Label> labels(voxels);
    switch (static_cast<Datatype>(h.datatype)) {
    case Datatype::Uint8: decode_integers<std::uint8_t>(payload, false, mapping, labels); break;
    case Datatype::Int16: decode_integers<std::int16_t>(payload, swap, mapping, labels); break;
    case Datatype::Uint16: decode_integers<std::uint16_t>(payload, swap, mapping, labels); break;
    case Datatype::Int32: decode_integers<std::int32_t>(payload, swap, mapping, labels); break;
    case Datatype::Float32: decode_floats(payload, swap, mapping, labels); break;
    default: break; // rejected above
    }

    return {LabelVolume(summary.dims, summary.spacing, std::move(labels), case_id_from_path(path)), orientation_of(h),
            summary};
}

LabelVolume read_label_nifti(const std::filesystem::path& path, const ReadOptions& options) {
    return read_label_image(path, options).volume;
}

Header make_label_header(const LabelVolume& vol, const Orientation& o) {
    const Dims& d = vol.dims();
    constexpr auto kMaxDim = static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max());
    if (d.nx > kMaxDim || d.ny > kMaxDim || d.nz > kMaxDim) {
        throw Error(ErrorCode::IoError, "dims exceed the NIfTI-1 int16 limit");
    }
    Header h;
    h.dim = {3, static_cast<std::int16_t>(d.nx), static_cast<std::int16_t>(d.ny), static_cast<std::int16_t>(d.nz), 1, 1, 1, 1};
    h.datatype = static_cast<std::int16_t>(Datatype::Uint8);
    h.bitpix = 8;
    h.pixdim = {o.qfac, vol.spacing().x, vol.spacing().y, vol.spacing().z, 0.0F, 0.0F, 0.0F, 0.0F};
    h.vox_offset = kDefaultVoxOffset;
    h.scl_slope = 1.0F;
    h.scl_inter = 0.0F;
    h.xyzt_units = o.xyzt_units;
    h.cal_max = static_cast<float>(kMaxLabel);
    h.qform_code = o.qform_code;
    h.sform_code = o.sform_code;
    h.quatern_b = o.quatern_b;
    h.quatern_c = o.quatern_c;
    h.quatern_d = o.quatern_d;
    h.qoffset_x = o.qoffset_x;
    h.qoffset_y = o.qoffset_y;
    h.qoffset_z = o.qoffset_z;
    h.srow_x = o.srow_x;
    h.srow_y = o.srow_y;
    h.srow_z = o.srow_z;
    h.magic = kSingleFileMagic;
    return h;
}

std::vector<std::uint8_t> encode_label_file(const LabelVolume& vol, const Orientation& orientation) {
    const auto header = encode_header(make_label_header(vol, orientation), Endian::Little);
    const auto payload = vol.labels();
    // Header, 4-byte zero extension stub, then voxels at offset 352.
    std::vector<std::uint8_t> out(static_cast<std::size_t>(kDefaultVoxOffset) + payload.size(), 0);
    std::copy(header.begin(), header.end(), out.begin());
    std::copy(payload.begin(), payload.end(), out.begin() + static_cast<std::ptrdiff_t>(kDefaultVoxOffset));
    return out;
}

void write_label_nifti(const LabelVolume& vol, const std::filesystem::path& path, bool gzip,
                       const Orientation& orientation) {
    const auto bytes = encode_label_file(vol, orientation);
    Sink sink(path, gzip);
    sink.write(bytes);
    sink.close();
}

bool has_nifti_extension(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    return name.ends_with(".nii") || name.ends_with(".nii.gz");
}

std::string case_id_from_path(const std::filesystem::path& path) {
    std::string name = path.filename().string();
    for (const std::string_view suffix : {".nii.gz", ".nii"}) {
        if (name.ends_with(suffix)) {
            name.resize(name.size() - suffix.size());
            break;
        }
    }
    return name;
}

} // namespace pelvseg::nifti
