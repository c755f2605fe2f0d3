#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <zlib.h>

#include "nifti_fixture.hpp"
#include "oracles.hpp"
#include "pelvseg/error.hpp"
#include "pelvseg/nifti.hpp"

using namespace pelvseg;
namespace fs = std::filesystem;

namespace {

class NiftiTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("pelvseg_nifti_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_raw(const std::string& name, const std::vector<std::uint8_t>& bytes) const {
        const fs::path p = dir_ / name;
        std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                 static_cast<std::streamsize>(bytes.size()));
        return p;
    }

    fs::path write_gz(const std::string& name, const std::vector<std::uint8_t>& bytes) const {
        const fs::path p = dir_ / name;
        gzFile f = gzopen(p.string().c_str(), "wb");
        gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
        gzclose(f);
        return p;
    }

    static std::vector<std::uint8_t> slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    fs::path dir_;
};

using oracle::fixture_2x2x2;

const std::vector<Label> kFixtureLabels{0, 1, 2, 3, 4, 0, 1, 2};

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected pelvseg::Error";
    return ErrorCode::UsageError;
}

} // namespace

TEST_F(NiftiTest, HandcraftedFixture) {
    const auto p = write_raw("tiny.nii", fixture_2x2x2());
    const auto v = nifti::read_label_nifti(p);
    EXPECT_EQ(v.dims(), (Dims{2, 2, 2}));
    EXPECT_TRUE(std::equal(kFixtureLabels.begin(), kFixtureLabels.end(), v.labels().begin(), v.labels().end()));
    EXPECT_EQ(v.spacing(), (Spacing{0.85F, 0.85F, 0.80F}));
    EXPECT_EQ(v.case_id(), "tiny");
}

TEST_F(NiftiTest, GzipFixtureIdentical) {
    const auto plain = nifti::read_label_nifti(write_raw("a.nii", fixture_2x2x2()));
    const auto gz = nifti::read_label_nifti(write_gz("a.nii.gz", fixture_2x2x2()));
    EXPECT_EQ(plain, gz);
}

TEST_F(NiftiTest, GzipSniffedNotExtension) {
    const auto gz = nifti::read_label_nifti(write_gz("sneaky.nii", fixture_2x2x2()));
    EXPECT_EQ(gz.dims(), (Dims{2, 2, 2}));
}

TEST_F(NiftiTest, InspectHeader) {
    const auto s = nifti::inspect_header(write_raw("h.nii", fixture_2x2x2()));
    EXPECT_EQ(s.dims, (Dims{2, 2, 2}));
    EXPECT_EQ(s.datatype_name, "uint8");
    EXPECT_EQ(s.endian, nifti::Endian::Little);
    EXPECT_FALSE(s.gzipped);
}

TEST_F(NiftiTest, BigEndianFixture) {
    const auto bytes = fixture_2x2x2(true);
    // dim[0] = 3 stored big-endian.
    EXPECT_EQ(bytes[40], 0x00);
    EXPECT_EQ(bytes[41], 0x03);
    const auto p = write_raw("be.nii", bytes);
    const auto s = nifti::inspect_header(p);
    EXPECT_EQ(s.endian, nifti::Endian::Big);
    EXPECT_EQ(s.dims, (Dims{2, 2, 2}));
    const auto v = nifti::read_label_nifti(p);
    EXPECT_EQ(v.spacing(), (Spacing{0.85F, 0.85F, 0.80F}));
    EXPECT_TRUE(std::equal(kFixtureLabels.begin(), kFixtureLabels.end(), v.labels().begin(), v.labels().end()));
}

TEST_F(NiftiTest, BigEndianInt16Payload) {
    oracle::RawHeader h(true);
    h.dims(3, 2, 1, 1);
    h.type(4, 16);
    h.spacing(1, 1, 1);
    const auto p = write_raw("be16.nii", h.file({0x00, 0x03, 0x00, 0x04}));
    const auto v = nifti::read_label_nifti(p);
    EXPECT_EQ(v.at(0, 0, 0), 3);
    EXPECT_EQ(v.at(1, 0, 0), 4);
}

TEST_F(NiftiTest, TruncatedFileIsNotNifti) {
    auto bytes = fixture_2x2x2();
    bytes.resize(100);
    const auto p = write_raw("short.nii", bytes);
    EXPECT_EQ(code_of([&] { nifti::read_label_nifti(p); }), ErrorCode::NotNifti);
    EXPECT_EQ(code_of([&] { nifti::inspect_header(p); }), ErrorCode::NotNifti);
}

TEST_F(NiftiTest, TruncatedPayloadIsNotNifti) {
    auto bytes = fixture_2x2x2();
    bytes.pop_back();
    EXPECT_EQ(code_of([&] { nifti::read_label_nifti(write_raw("cut.nii", bytes)); }), ErrorCode::NotNifti);
}

TEST_F(NiftiTest, BadMagic) {
    auto bytes = fixture_2x2x2();
    bytes[345] = 'x';
    EXPECT_EQ(code_of([&] { nifti::read_label_nifti(write_raw("m.nii", bytes)); }), ErrorCode::NotNifti);
}

TEST_F(NiftiTest, Float32Labels) {
    oracle::RawHeader h(false);
    h.dims(3, 2, 1, 1);
    h.type(16, 32);
    h.spacing(1, 1, 1);
    std::vector<std::uint8_t> payload(8);
    const float good[2] = {2.0F, 4.0F};
    std::memcpy(payload.data(), good, 8);
    EXPECT_EQ(nifti::read_label_nifti(write_raw("f.nii", h.file(payload))).at(1, 0, 0), 4);
    const float bad[2] = {2.5F, 4.0F};
    std::memcpy(payload.data(), bad, 8);
    const auto p = write_raw("fb.nii", h.file(payload));
    EXPECT_EQ(code_of([&] { nifti::read_label_nifti(p); }), ErrorCode::NonIntegralLabels);
}

TEST_F(NiftiTest, UnsupportedDatatype) {
    oracle::RawHeader h(false);
    h.dims(3, 1, 1, 1);
    h.type(64, 64);
    h.spacing(1, 1, 1);
    const auto p = write_raw("d.nii", h.file(std::vector<std::uint8_t>(8, 0)));
    EXPECT_EQ(code_of([&] { nifti::read_label_nifti(p); }), ErrorCode::UnsupportedDatatype);
}

TEST_F(NiftiTest, ScaledLabelsRejected) {
    oracle::RawHeader h(false);
    h.dims(3, 2, 2, 2);
    h.type(2, 8);
    h.spacing(1, 1, 1);
    h.put_f32(112, 2.0F);
    const auto p = write_raw("s.nii", h.file(std::vector<std::uint8_t>(8, 0)));
    EXPECT_EQ(code_of([&] { nifti::read_label_nifti(p); }), ErrorCode::ScaledLabels);
}

TEST_F(NiftiTest, FourDimensionalRejected) {
    oracle::RawHeader h(false);
    h.dims(4, 2, 2, 2);
    h.put_i16(48, 2);
    h.type(2, 8);
    h.spacing(1, 1, 1);
    const auto p = write_raw("4d.nii", h.file(std::vector<std::uint8_t>(16, 0)));
    EXPECT_EQ(code_of([&] { nifti::read_label_nifti(p); }), ErrorCode::UnsupportedShape);
}

TEST_F(NiftiTest, OutOfRangeAndRelabel) {
    oracle::RawHeader h(false);
    h.dims(3, 2, 1, 1);
    h.type(4, 16);
    h.spacing(1, 1, 1);
    const auto p = write_raw("r.nii", h.file({0x00, 0x00, 0xF4, 0x01})); // 0, 500
    EXPECT_EQ(code_of([&] { nifti::read_label_nifti(p); }), ErrorCode::LabelOutOfRange);
    nifti::ReadOptions opts;
    opts.relabel = LabelMapping{{0, 0}, {500, 3}};
    EXPECT_EQ(nifti::read_label_nifti(p, opts).at(1, 0, 0), 3);
}

TEST_F(NiftiTest, WriteLayoutIsByteExact) {
    std::mt19937_64 rng(1);
    const auto v = oracle::random_labels(rng, {5, 4, 3}, 0.5, {0.5F, 0.75F, 2.5F});
    const auto p = dir_ / "w.nii";
    nifti::write_label_nifti(v, p, false);
    const auto bytes = slurp(p);
    ASSERT_EQ(bytes.size(), 352U + 60U);
    std::int32_t hdr = 0;
    std::memcpy(&hdr, bytes.data(), 4);
    EXPECT_EQ(hdr, 348);
    EXPECT_EQ(std::memcmp(bytes.data() + 344, "n+1\0", 4), 0);
    EXPECT_TRUE(std::equal(v.labels().begin(), v.labels().end(), bytes.begin() + 352));
}

TEST_F(NiftiTest, GzipMagic) {
    const LabelVolume v({2, 2, 2}, {}, kFixtureLabels);
    const auto p = dir_ / "g.nii.gz";
    nifti::write_label_nifti(v, p, true);
    const auto bytes = slurp(p);
    ASSERT_GE(bytes.size(), 2U);
    EXPECT_EQ(bytes[0], 0x1f);
    EXPECT_EQ(bytes[1], 0x8b);
}

TEST_F(NiftiTest, RoundTripRandom) {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<std::size_t> side(1, 12);
    std::uniform_real_distribution<float> sp(0.3F, 3.0F);
    for (int trial = 0; trial < 20; ++trial) {
        const Dims d{side(rng), side(rng), side(rng)};
        const auto v = oracle::random_labels(rng, d, 0.5, {sp(rng), sp(rng), sp(rng)}).with_case_id("rt");
        for (bool gz : {false, true}) {
            const auto p = dir_ / (gz ? "rt.nii.gz" : "rt.nii");
            nifti::write_label_nifti(v, p, gz);
            EXPECT_EQ(nifti::read_label_nifti(p), v);
        }
    }
}

TEST_F(NiftiTest, OrientationPreserved) {
    const LabelVolume v({2, 2, 2}, {}, kFixtureLabels, "o");
    nifti::Orientation o;
    o.qform_code = 1;
    o.sform_code = 2;
    o.quatern_b = 0.25F;
    o.qoffset_z = -12.5F;
    o.srow_x = {1, 0, 0, 3};
    o.qfac = -1.0F;
    const auto p = dir_ / "o.nii";
    nifti::write_label_nifti(v, p, false, o);
    EXPECT_EQ(nifti::read_label_image(p).orientation, o);
}

TEST_F(NiftiTest, HeaderEncodeDecodeBothEndians) {
    const LabelVolume v({3, 2, 1}, {0.5F, 1, 2}, {0, 1, 2, 3, 4, 0});
    const auto h = nifti::make_label_header(v);
    for (auto e : {nifti::Endian::Little, nifti::Endian::Big}) {
        const auto bytes = nifti::encode_header(h, e);
        const auto d = nifti::decode_header(bytes);
        EXPECT_EQ(d.endian, e);
        EXPECT_EQ(d.header, h);
    }
}

TEST(NiftiPaths, CaseIds) {
    EXPECT_EQ(nifti::case_id_from_path("a/b/case_01.nii.gz"), "case_01");
    EXPECT_EQ(nifti::case_id_from_path("x.nii"), "x");
    EXPECT_TRUE(nifti::has_nifti_extension("q.nii.gz"));
    EXPECT_FALSE(nifti::has_nifti_extension("q.json"));
}
