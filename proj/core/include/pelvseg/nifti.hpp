#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "pelvseg/volume.hpp"

namespace pelvseg::nifti {

inline constexpr std::int32_t kHeaderSize = 348;
inline constexpr float kDefaultVoxOffset = 352.0F;

enum class Endian { Little, Big };

// NIfTI-1 datatype codes understood by the label reader.
enum class Datatype : std::int16_t {
    Uint8 = 2,
    Int16 = 4,
    Int32 = 8,
    Float32 = 16,
    Float64 = 64,
    Int8 = 256,
    Uint16 = 512,
    Uint32 = 768,
    Int64 = 1024,
    Uint64 = 1280,
};

std::string datatype_name(std::int16_t code);

// The 348-byte nifti_1_header, field for field. Analyze leftovers
// (data_type, db_name, extents, session_error, regular) are carried so a
// decoded header re-encodes to the same bytes.
struct Header {
    std::int32_t sizeof_hdr = kHeaderSize;
    std::array<char, 10> data_type{};
    std::array<char, 18> db_name{};
    std::int32_t extents = 0;
    std::int16_t session_error = 0;
    char regular = 'r';
    std::uint8_t dim_info = 0;
    std::array<std::int16_t, 8> dim{};
    float intent_p1 = 0.0F;
    float intent_p2 = 0.0F;
    float intent_p3 = 0.0F;
    std::int16_t intent_code = 0;
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    std::int16_t slice_start = 0;
    std::array<float, 8> pixdim{};
    float vox_offset = kDefaultVoxOffset;
    float scl_slope = 1.0F;
    float scl_inter = 0.0F;
    std::int16_t slice_end = 0;
    std::uint8_t slice_code = 0;
    std::uint8_t xyzt_units = 0;
    float cal_max = 0.0F;
    float cal_min = 0.0F;
    float slice_duration = 0.0F;
    float toffset = 0.0F;
    std::int32_t glmax = 0;
    std::int32_t glmin = 0;
    std::array<char, 80> descrip{};
    std::array<char, 24> aux_file{};
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    float quatern_b = 0.0F;
    float quatern_c = 0.0F;
    float quatern_d = 0.0F;
    float qoffset_x = 0.0F;
    float qoffset_y = 0.0F;
    float qoffset_z = 0.0F;
    std::array<float, 4> srow_x{};
    std::array<float, 4> srow_y{};
    std::array<float, 4> srow_z{};
    std::array<char, 16> intent_name{};
    std::array<char, 4> magic{};

    friend bool operator==(const Header&, const Header&) = default;
};

// qform/sform block. Read and written back verbatim, never interpreted.
struct Orientation {
    float qfac = 1.0F; // pixdim[0]
    std::uint8_t xyzt_units = 2;
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    float quatern_b = 0.0F;
    float quatern_c = 0.0F;
    float quatern_d = 0.0F;
    float qoffset_x = 0.0F;
    float qoffset_y = 0.0F;
    float qoffset_z = 0.0F;
    std::array<float, 4> srow_x{};
    std::array<float, 4> srow_y{};
    std::array<float, 4> srow_z{};

    friend bool operator==(const Orientation&, const Orientation&) = default;
};

struct DecodedHeader {
    Header header;
    Endian endian = Endian::Little;
};

// Validates sizeof_hdr, dim[0] and the single-file magic; detects byte order.
// Throws NotNifti.
DecodedHeader decode_header(std::span<const std::uint8_t> bytes);
std::array<std::uint8_t, kHeaderSize> encode_header(const Header& header, Endian endian = Endian::Little);

Orientation orientation_of(const Header& header);

struct HeaderSummary {
    Dims dims;
    Spacing spacing;
    std::int16_t datatype = 0;
    std::string datatype_name;
    Endian endian = Endian::Little;
    bool gzipped = false;
};

HeaderSummary inspect_header(const std::filesystem::path& path);

struct ReadOptions {
    // Applied to raw stored values before the 0..4 range check.
    std::optional<LabelMapping> relabel;
};

struct LabelImage {
    LabelVolume volume;
    Orientation orientation;
    HeaderSummary summary;
};

LabelImage read_label_image(const std::filesystem::path& path, const ReadOptions& options = {});
LabelVolume read_label_nifti(const std::filesystem::path& path, const ReadOptions& options = {});

// Single-file, little-endian, uint8, vox_offset 352, unit scaling.
Header make_label_header(const LabelVolume& vol, const Orientation& orientation = {});
void write_label_nifti(const LabelVolume& vol, const std::filesystem::path& path, bool gzip,
                       const Orientation& orientation = {});

// Serialised bytes of an uncompressed label file (header, extension stub, payload).
std::vector<std::uint8_t> encode_label_file(const LabelVolume& vol, const Orientation& orientation = {});

bool has_nifti_extension(const std::filesystem::path& path);
// "case_001.nii.gz" -> "case_001".
std::string case_id_from_path(const std::filesystem::path& path);

} // namespace pelvseg::nifti
