#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bseg/rng.hpp"
#include "bseg/tensor.hpp"

namespace bseg {

// Acquisition style of one synthetic "center": background palette, lesion
// morphology ranges, and artifact rates. Center 6 uses disjoint color/texture
// ranges so the unseen-center shift is real and measurable.
struct CenterProfile {
    int center_id = 1;
    std::array<double, 3> bg_color{0.70, 0.35, 0.32};
    double noise_level = 0.03;
    int blob_count_min = 1;
    int blob_count_max = 2;
    double blob_area_min = 150.0;  // pixels at 64x64, scaled with image area
    double blob_area_max = 500.0;
    double ecc_min = 1.0;          // semi-axis ratio >= 1
    double ecc_max = 1.8;
    std::array<double, 3> blob_tint{0.45, 0.18, 0.15};
    double specular_prob = 0.1;
    double occlusion_prob = 0.0;
    int blur_radius = 0;

    void validate(int side) const;
};

struct CorpusSpec {
    std::uint64_t seed = 0;
    int side = 64;
    int train_per_center = 60;   // centers C1..C5, singles, all positive
    int c6_sin_frames = 40;      // unseen-center singles
    int c6_seq_frames = 60;      // unseen-center sequences with negatives
    int c15_seq_frames = 60;     // seen-center sequences, heavier artifacts
    double negative_fraction = 0.2;
    int sequence_length = 10;
    double jitter = 2.0;         // per-frame blob translation scale (pixels)

    void validate() const;
    bool operator==(const CorpusSpec&) const = default;
};

inline constexpr const char* kSplitTrain = "train";
inline constexpr const char* kSplitC6Sin = "test-C6-SIN";
inline constexpr const char* kSplitC6Seq = "test-C6-SEQ";
inline constexpr const char* kSplitC15Seq = "test-C1-5-SEQ";

struct Frame {
    Tensor image;  // [3,H,W] in [0,1]
    Tensor mask;   // [H,W] of {0,1}
};

// Default profiles for centers C1..C6 (index = center_id - 1).
std::vector<CenterProfile> default_center_profiles();

// Sequence-modality variant of a profile: more speculars/occlusions/noise.
CenterProfile sequence_variant(CenterProfile profile);

// One frame: noisy background, 0..k soft-edged tinted ellipses, artifacts
// drawn after the mask is fixed so they corrupt the image only.
Frame render_frame(const CenterProfile& profile, int side, const Rng& rng);

// Correlated frames: one blob configuration, per-frame jittered translation
// (bounded so the blobs stay in frame), per-frame artifact redraw. The last
// `negative_tail` frames move the blobs out of frame (empty masks).
std::vector<Frame> render_sequence(const CenterProfile& profile, int side, int length,
                                   double jitter, const Rng& rng, int negative_tail = 0);

struct ManifestEntry {
    std::string split;
    std::string center;
    std::string sequence;  // "-" for single frames
    std::string image;     // path relative to the corpus root, '/' separated
    std::string mask;
    bool positive = false;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

// Writes the corpus (<split>/<center>/<frame>.{ppm,pgm} plus manifest.txt)
// and returns the manifest. Output bytes are a pure function of the spec.
Manifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

Manifest load_manifest(const std::filesystem::path& corpus_root);

// Loads every pair of one split in manifest order.
std::vector<Frame> load_split(const std::filesystem::path& corpus_root, const std::string& split);

struct LoadedPair {
    std::string id;  // relative image path without extension
    Frame frame;
};

// Scans a directory tree for .ppm images with sibling .pgm masks, sorted by
// path (the eval entry point for split directories).
std::vector<LoadedPair> scan_pairs(const std::filesystem::path& dir);

std::string manifest_to_text(const Manifest& manifest);

}  // namespace bseg
