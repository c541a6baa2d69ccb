#include "bseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "bseg/error.hpp"
#include "bseg/netpbm.hpp"

namespace bseg {

void CenterProfile::validate(int side) const {
    if (side < 8) throw InputError("center profile: side too small");
    if (specular_prob < 0.0 || specular_prob > 1.0 || occlusion_prob < 0.0 || occlusion_prob > 1.0) {
        throw InputError("center profile: artifact probabilities must be in [0,1]");
    }
    if (blob_area_min > blob_area_max) throw InputError("center profile: blob area min > max");
    if (blob_area_min < 64.0 || blob_area_max > 1600.0) {
        throw InputError("center profile: blob area range must lie in [64,1600] at 64x64 scale");
    }
    if (blob_count_min < 0 || blob_count_max < blob_count_min) {
        throw InputError("center profile: invalid blob count range");
    }
    if (ecc_min < 1.0 || ecc_max < ecc_min) throw InputError("center profile: invalid eccentricity range");
    if (noise_level < 0.0 || blur_radius < 0) throw InputError("center profile: invalid texture parameters");
}

void CorpusSpec::validate() const {
    if (side < 8 || side % 4 != 0) throw InputError("corpus: side must be >= 8 and divisible by 4");
    if (train_per_center <= 0 || c6_sin_frames <= 0 || c6_seq_frames <= 0 || c15_seq_frames <= 0) {
        throw InputError("corpus: split sizes must be > 0");
    }
    if (negative_fraction < 0.0 || negative_fraction >= 1.0) {
        throw InputError("corpus: negative_fraction must be in [0,1)");
    }
    if (sequence_length < 1) throw InputError("corpus: sequence_length must be >= 1");
    if (jitter < 0.0) throw InputError("corpus: jitter must be >= 0");
}

std::vector<CenterProfile> default_center_profiles() {
    std::vector<CenterProfile> p(6);
    p[0] = {1, {0.70, 0.34, 0.32}, 0.030, 1, 2, 150, 500, 1.0, 1.8, {0.46, 0.17, 0.14}, 0.10, 0.00, 0};
    p[1] = {2, {0.64, 0.30, 0.36}, 0.040, 1, 2, 150, 500, 1.0, 1.8, {0.42, 0.20, 0.18}, 0.15, 0.00, 0};
    p[2] = {3, {0.76, 0.40, 0.37}, 0.030, 1, 2, 180, 550, 1.1, 2.0, {0.50, 0.22, 0.19}, 0.10, 0.00, 1};
    p[3] = {4, {0.62, 0.33, 0.27}, 0.050, 1, 2, 130, 450, 1.0, 1.7, {0.40, 0.15, 0.12}, 0.20, 0.05, 0};
    p[4] = {5, {0.72, 0.29, 0.25}, 0.040, 1, 2, 150, 520, 1.0, 1.9, {0.48, 0.14, 0.13}, 0.15, 0.00, 1};
    // Unseen center: yellow-green cast, coarser texture, heavier artifacts.
    p[5] = {6, {0.55, 0.46, 0.24}, 0.080, 1, 2, 150, 500, 1.0, 1.9, {0.38, 0.23, 0.10}, 0.35, 0.25, 2};
    return p;
}

CenterProfile sequence_variant(CenterProfile profile) {
    profile.specular_prob = std::min(1.0, profile.specular_prob + 0.30);
    profile.occlusion_prob = std::min(1.0, profile.occlusion_prob + 0.35);
    profile.noise_level += 0.02;
    return profile;
}

namespace {

struct Blob {
    double cx, cy;      // center, pixels
    double a, b;        // semi-axes, pixels
    double cos_phi, sin_phi;
    double edge_soft;   // transition half-width in normalized radius
    std::array<double, 3> tint;
};

std::vector<Blob> sample_blobs(const CenterProfile& profile, int side, Rng rng) {
    const double area_scale = static_cast<double>(side) * side / (64.0 * 64.0);
    const int count = rng.uniform_int(profile.blob_count_min, profile.blob_count_max);
    std::vector<Blob> blobs;
    blobs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Blob blob;
        const double area = rng.uniform(profile.blob_area_min, profile.blob_area_max) * area_scale;
        const double ecc = rng.uniform(profile.ecc_min, profile.ecc_max);
        blob.a = std::sqrt(area * ecc / 3.14159265358979323846);
        blob.b = std::sqrt(area / (ecc * 3.14159265358979323846));
        const double phi = rng.uniform(0.0, 3.14159265358979323846);
        blob.cos_phi = std::cos(phi);
        blob.sin_phi = std::sin(phi);
        blob.cx = rng.uniform(0.24, 0.76) * side;
        blob.cy = rng.uniform(0.24, 0.76) * side;
        blob.edge_soft = rng.uniform(0.08, 0.18);
        for (int ch = 0; ch < 3; ++ch) {
            blob.tint[static_cast<std::size_t>(ch)] =
                profile.blob_tint[static_cast<std::size_t>(ch)] + rng.uniform(-0.04, 0.04);
        }
        blobs.push_back(blob);
    }
    return blobs;
}

double blob_alpha(const Blob& blob, double px, double py) {
    const double dx = px - blob.cx;
    const double dy = py - blob.cy;
    const double u = (dx * blob.cos_phi + dy * blob.sin_phi) / blob.a;
    const double v = (-dx * blob.sin_phi + dy * blob.cos_phi) / blob.b;
    const double r = std::sqrt(u * u + v * v);
    const double s = blob.edge_soft;
    return std::clamp((1.0 + s - r) / (2.0 * s), 0.0, 1.0);
}

void box_blur(Tensor& image, int radius) {
    if (radius <= 0) return;
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    Tensor tmp(image.dims());
    for (int pass = 0; pass < radius; ++pass) {
        // horizontal then vertical 3-tap box
        for (int ch = 0; ch < c; ++ch) {
            float* src = image.data() + static_cast<std::int64_t>(ch) * h * w;
            float* dst = tmp.data() + static_cast<std::int64_t>(ch) * h * w;
            for (int y = 0; y < h; ++y) {
                const float* row = src + static_cast<std::int64_t>(y) * w;
                float* out = dst + static_cast<std::int64_t>(y) * w;
                for (int x = 0; x < w; ++x) {
                    const int x0 = std::max(0, x - 1), x1 = std::min(w - 1, x + 1);
                    out[x] = (row[x0] + row[x] + row[x1]) / 3.0f;
                }
            }
            for (int y = 0; y < h; ++y) {
                const int y0 = std::max(0, y - 1), y1 = std::min(h - 1, y + 1);
                for (int x = 0; x < w; ++x) {
                    src[static_cast<std::int64_t>(y) * w + x] =
                        (dst[static_cast<std::int64_t>(y0) * w + x] +
                         dst[static_cast<std::int64_t>(y) * w + x] +
                         dst[static_cast<std::int64_t>(y1) * w + x]) /
                        3.0f;
                }
            }
        }
    }
}

Frame rasterize(const CenterProfile& profile, const std::vector<Blob>& blobs, int side,
                Rng noise_rng, Rng artifact_rng) {
    Frame frame;
    frame.image = Tensor({3, side, side});
    frame.mask = Tensor({side, side});
    const std::int64_t plane = static_cast<std::int64_t>(side) * side;
    float* r = frame.image.data();
    float* g = r + plane;
    float* b = g + plane;

    for (int y = 0; y < side; ++y) {
        const double shade = 0.92 + 0.16 * static_cast<double>(y) / side;
        for (int x = 0; x < side; ++x) {
            const std::int64_t i = static_cast<std::int64_t>(y) * side + x;
            double px[3];
            for (int ch = 0; ch < 3; ++ch) {
                px[ch] = profile.bg_color[static_cast<std::size_t>(ch)] * shade +
                         noise_rng.uniform(-profile.noise_level, profile.noise_level);
            }
            double alpha_union = 0.0;
            for (const Blob& blob : blobs) {
                const double alpha = blob_alpha(blob, x + 0.5, y + 0.5);
                alpha_union = std::max(alpha_union, alpha);
                if (alpha > 0.0) {
                    const double rim = 0.85 + 0.3 * alpha;
                    for (int ch = 0; ch < 3; ++ch) {
                        px[ch] = px[ch] * (1.0 - alpha) +
                                 blob.tint[static_cast<std::size_t>(ch)] * rim * alpha;
                    }
                }
            }
            frame.mask[i] = alpha_union >= 0.5 ? 1.0f : 0.0f;
            r[i] = static_cast<float>(px[0]);
            g[i] = static_cast<float>(px[1]);
            b[i] = static_cast<float>(px[2]);
        }
    }

    // Artifacts corrupt the image only; the mask above is already fixed.
    if (artifact_rng.bernoulli(profile.specular_prob)) {
        const int disks = artifact_rng.uniform_int(1, 3);
        for (int d = 0; d < disks; ++d) {
            const double cx = artifact_rng.uniform(0.05, 0.95) * side;
            const double cy = artifact_rng.uniform(0.05, 0.95) * side;
            const double rad = artifact_rng.uniform(1.0, 2.8);
            const int y0 = std::max(0, static_cast<int>(cy - rad - 1));
            const int y1 = std::min(side - 1, static_cast<int>(cy + rad + 1));
            for (int y = y0; y <= y1; ++y) {
                for (int x = std::max(0, static_cast<int>(cx - rad - 1));
                     x <= std::min(side - 1, static_cast<int>(cx + rad + 1)); ++x) {
                    const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                    if (dx * dx + dy * dy <= rad * rad) {
                        const std::int64_t i = static_cast<std::int64_t>(y) * side + x;
                        r[i] = 1.0f;
                        g[i] = 1.0f;
                        b[i] = 1.0f;
                    }
                }
            }
        }
    }
    if (artifact_rng.bernoulli(profile.occlusion_prob)) {
        const bool vertical = artifact_rng.bernoulli(0.5);
        const int width = artifact_rng.uniform_int(3, std::max(3, side / 8));
        const int pos = artifact_rng.uniform_int(0, side - width);
        const float dark = static_cast<float>(artifact_rng.uniform(0.05, 0.18));
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const bool hit = vertical ? (x >= pos && x < pos + width)
                                          : (y >= pos && y < pos + width);
                if (hit) {
                    const std::int64_t i = static_cast<std::int64_t>(y) * side + x;
                    r[i] *= dark;
                    g[i] *= dark;
                    b[i] *= dark;
                }
            }
        }
    }

    box_blur(frame.image, profile.blur_radius);
    for (std::int64_t i = 0; i < frame.image.size(); ++i) {
        frame.image[i] = std::clamp(frame.image[i], 0.0f, 1.0f);
    }
    return frame;
}

}  // namespace

Frame render_frame(const CenterProfile& profile, int side, const Rng& rng) {
    profile.validate(side);
    const auto blobs = sample_blobs(profile, side, rng.derive(1));
    return rasterize(profile, blobs, side, rng.derive(2), rng.derive(3));
}

std::vector<Frame> render_sequence(const CenterProfile& profile, int side, int length,
                                   double jitter, const Rng& rng, int negative_tail) {
    profile.validate(side);
    if (length < 1) throw InputError("render_sequence: length must be >= 1");
    if (negative_tail < 0 || negative_tail > length) {
        throw InputError("render_sequence: negative_tail outside [0, length]");
    }

    const auto base_blobs = sample_blobs(profile, side, rng.derive(1));
    Rng traj = rng.derive(4);
    const double drift_x = traj.uniform(-0.5, 0.5) * jitter;
    const double drift_y = traj.uniform(-0.5, 0.5) * jitter;
    const double bound = 0.15 * side;  // keeps blobs in frame outside the forced tail

    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(length));
    double off_x = 0.0, off_y = 0.0;
    for (int f = 0; f < length; ++f) {
        if (f > 0) {
            off_x = std::clamp(off_x + drift_x + traj.uniform(-jitter, jitter), -bound, bound);
            off_y = std::clamp(off_y + drift_y + traj.uniform(-jitter, jitter), -bound, bound);
        }
        std::vector<Blob> blobs = base_blobs;
        const bool forced_negative = f >= length - negative_tail;
        for (Blob& blob : blobs) {
            blob.cx += off_x + (forced_negative ? 4.0 * side : 0.0);
            blob.cy += off_y;
        }
        frames.push_back(rasterize(profile, blobs, side, rng.derive(2 + 2 * f), rng.derive(3 + 2 * f)));
    }
    return frames;
}

namespace {

std::string frame_id_single(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "single_%03d", index);
    return buf;
}

std::string frame_id_seq(int seq, int frame) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "seq%02d_f%02d", seq, frame);
    return buf;
}

bool mask_positive(const Tensor& mask) {
    for (std::int64_t i = 0; i < mask.size(); ++i) {
        if (mask[i] > 0.5f) return true;
    }
    return false;
}

void write_frame(const std::filesystem::path& root, const std::string& rel_image,
                 const std::string& rel_mask, const Frame& frame) {
    Tensor mask_bytes(frame.mask.dims());
    for (std::int64_t i = 0; i < frame.mask.size(); ++i) {
        mask_bytes[i] = frame.mask[i] > 0.5f ? 255.0f : 0.0f;
    }
    write_ppm(root / rel_image, frame.image);
    write_pgm(root / rel_mask, mask_bytes);
}

struct SplitWriter {
    const std::filesystem::path& root;
    Manifest& manifest;

    void add(const std::string& split, const std::string& center, const std::string& sequence,
             const std::string& frame_id, const Frame& frame) {
        const std::string dir = split + "/" + center;
        std::error_code ec;
        std::filesystem::create_directories(root / dir, ec);
        if (ec) throw IoError("corpus: cannot create directory '" + (root / dir).string() + "'");
        ManifestEntry e;
        e.split = split;
        e.center = center;
        e.sequence = sequence;
        e.image = dir + "/" + frame_id + ".ppm";
        e.mask = dir + "/" + frame_id + ".pgm";
        e.positive = mask_positive(frame.mask);
        write_frame(root, e.image, e.mask, frame);
        manifest.entries.push_back(std::move(e));
    }
};

// Trailing-negative frame counts per sequence: totals hit
// round(frames * fraction) exactly, spread as evenly as possible.
std::vector<int> negative_tails(int n_sequences, const std::vector<int>& lengths, double fraction) {
    int total_frames = 0;
    for (int len : lengths) total_frames += len;
    int negatives = static_cast<int>(std::llround(fraction * total_frames));
    std::vector<int> tails(static_cast<std::size_t>(n_sequences), 0);
    int k = 0;
    while (negatives > 0) {
        const std::size_t i = static_cast<std::size_t>(k % n_sequences);
        if (tails[i] < lengths[i]) {
            ++tails[i];
            --negatives;
        }
        ++k;
        if (k > n_sequences * (1 + *std::max_element(lengths.begin(), lengths.end()))) break;
    }
    return tails;
}

}  // namespace

Manifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    const auto profiles = default_center_profiles();
    for (const auto& p : profiles) p.validate(spec.side);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("corpus: cannot create output directory '" + out_dir.string() + "'");

    Manifest manifest;
    SplitWriter writer{out_dir, manifest};
    const Rng master(spec.seed);

    for (int c = 1; c <= 5; ++c) {
        const CenterProfile& profile = profiles[static_cast<std::size_t>(c - 1)];
        for (int i = 0; i < spec.train_per_center; ++i) {
            const Frame frame =
                render_frame(profile, spec.side, master.derive(1000 + static_cast<std::uint64_t>(c),
                                                               static_cast<std::uint64_t>(i)));
            writer.add(kSplitTrain, "C" + std::to_string(c), "-", frame_id_single(i), frame);
        }
    }

    for (int i = 0; i < spec.c6_sin_frames; ++i) {
        const Frame frame =
            render_frame(profiles[5], spec.side, master.derive(2000, static_cast<std::uint64_t>(i)));
        writer.add(kSplitC6Sin, "C6", "-", frame_id_single(i), frame);
    }

    const auto emit_sequences = [&](const char* split, int total_frames, std::uint64_t stream,
                                    const std::function<CenterProfile(int)>& profile_for,
                                    const std::function<std::string(int)>& center_for) {
        const int full = total_frames / spec.sequence_length;
        const int rem = total_frames % spec.sequence_length;
        const int n_seq = full + (rem > 0 ? 1 : 0);
        std::vector<int> lengths(static_cast<std::size_t>(n_seq), spec.sequence_length);
        if (rem > 0) lengths.back() = rem;
        const auto tails = negative_tails(n_seq, lengths, spec.negative_fraction);
        for (int s = 0; s < n_seq; ++s) {
            const CenterProfile profile = profile_for(s);
            const auto frames = render_sequence(profile, spec.side, lengths[static_cast<std::size_t>(s)],
                                                spec.jitter,
                                                master.derive(stream, static_cast<std::uint64_t>(s)),
                                                tails[static_cast<std::size_t>(s)]);
            for (std::size_t f = 0; f < frames.size(); ++f) {
                writer.add(split, center_for(s), "seq" + std::to_string(s),
                           frame_id_seq(s, static_cast<int>(f)), frames[f]);
            }
        }
    };

    emit_sequences(kSplitC6Seq, spec.c6_seq_frames, 3000,
                   [&](int) { return profiles[5]; }, [](int) { return std::string("C6"); });
    emit_sequences(kSplitC15Seq, spec.c15_seq_frames, 4000,
                   [&](int s) { return sequence_variant(profiles[static_cast<std::size_t>(s % 5)]); },
                   [](int s) { return "C" + std::to_string(s % 5 + 1); });

    const std::filesystem::path manifest_path = out_dir / "manifest.txt";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw IoError("corpus: cannot write manifest '" + manifest_path.string() + "'");
    out << manifest_to_text(manifest);
    if (!out) throw IoError("corpus: manifest write failed for '" + manifest_path.string() + "'");
    return manifest;
}

std::string manifest_to_text(const Manifest& manifest) {
    std::ostringstream os;
    os << "# split center sequence image mask flag\n";
    for (const auto& e : manifest.entries) {
        os << e.split << " " << e.center << " " << e.sequence << " " << e.image << " " << e.mask
           << " " << (e.positive ? "positive" : "negative") << "\n";
    }
    return os.str();
}

Manifest load_manifest(const std::filesystem::path& corpus_root) {
    const auto path = corpus_root / "manifest.txt";
    std::ifstream in(path);
    if (!in) throw IoError("manifest: cannot open '" + path.string() + "'");
    Manifest manifest;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ManifestEntry e;
        std::string flag;
        if (!(ls >> e.split >> e.center >> e.sequence >> e.image >> e.mask >> flag)) {
            throw ParseError("manifest: '" + path.string() + "' line " + std::to_string(line_no) +
                             ": expected 6 fields");
        }
        if (flag != "positive" && flag != "negative") {
            throw ParseError("manifest: '" + path.string() + "' line " + std::to_string(line_no) +
                             ": flag field must be positive|negative, got '" + flag + "'");
        }
        e.positive = flag == "positive";
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

std::vector<Frame> load_split(const std::filesystem::path& corpus_root, const std::string& split) {
    const Manifest manifest = load_manifest(corpus_root);
    std::vector<Frame> frames;
    for (const auto& e : manifest.entries) {
        if (e.split != split) continue;
        auto [image, mask] = load_pair(corpus_root / e.image, corpus_root / e.mask);
        frames.push_back({std::move(image), std::move(mask)});
    }
    if (frames.empty()) {
        throw InputError("load_split: no entries for split '" + split + "' under '" +
                         corpus_root.string() + "'");
    }
    return frames;
}

std::vector<LoadedPair> scan_pairs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw InputError("scan_pairs: '" + dir.string() + "' is not a directory");
    }
    std::vector<std::filesystem::path> images;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            images.push_back(entry.path());
        }
    }
    std::sort(images.begin(), images.end());
    std::vector<LoadedPair> pairs;
    for (const auto& image_path : images) {
        std::filesystem::path mask_path = image_path;
        mask_path.replace_extension(".pgm");
        if (!std::filesystem::exists(mask_path)) continue;
        auto [image, mask] = load_pair(image_path, mask_path);
        LoadedPair p;
        p.id = std::filesystem::relative(image_path, dir).replace_extension("").generic_string();
        p.frame = {std::move(image), std::move(mask)};
        pairs.push_back(std::move(p));
    }
    if (pairs.empty()) {
        throw InputError("scan_pairs: no .ppm/.pgm pairs under '" + dir.string() + "'");
    }
    return pairs;
}

}  // namespace bseg
