#ifndef HYPERTRAIN_DATA_HPP
#define HYPERTRAIN_DATA_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <zlib.h>

#include "hypertrain/errors.hpp"
#include "hypertrain/linalg.hpp"
#include "hypertrain/rng.hpp"

namespace hypertrain {

enum class TaskKind { Classification, Regression };

/// In-memory dataset. Exactly one label field is populated depending on kind.
struct Dataset {
    TaskKind kind = TaskKind::Classification;
    DenseMatrix features;              // n_examples x n_features, [0,1] for images
    std::vector<int> class_labels;     // classification: ids in [0, n_classes)
    DenseVector reg_targets;           // regression: one target per example
    std::size_t n_classes = 0;

    std::size_t size() const { return features.rows; }
};

struct SplitSpec {
    std::size_t n_train = 0;
    std::size_t n_valid = 0;
    std::size_t n_test = 0;
    std::uint64_t seed = 0;
};

/// Disjoint index sets drawn from a shuffled permutation of the dataset.
struct Splits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

inline Splits make_splits(const Dataset& data, const SplitSpec& spec) {
    const std::size_t want = spec.n_train + spec.n_valid + spec.n_test;
    if (want > data.size())
        throw ConfigError("split: n_train+n_valid+n_test = " + std::to_string(want) + " exceeds dataset size " +
                          std::to_string(data.size()));
    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto rng = make_rng(spec.seed, {0x5b17});
    std::shuffle(perm.begin(), perm.end(), rng);
    Splits s;
    auto it = perm.begin();
    s.train.assign(it, it + spec.n_train);
    it += spec.n_train;
    s.valid.assign(it, it + spec.n_valid);
    it += spec.n_valid;
    s.test.assign(it, it + spec.n_test);
    return s;
}

/// One mini-batch: features plus whichever label kind the dataset carries.
struct Batch {
    DenseMatrix features;
    std::vector<int> class_labels;
    DenseVector reg_targets;

    std::size_t size() const { return features.rows; }
};

inline Batch gather(const Dataset& data, const std::vector<std::size_t>& idx) {
    Batch b;
    b.features = DenseMatrix(idx.size(), data.features.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* src = data.features.row(idx[i]);
        std::copy(src, src + data.features.cols, b.features.row(i));
    }
    if (data.kind == TaskKind::Classification) {
        b.class_labels.reserve(idx.size());
        for (std::size_t i : idx) b.class_labels.push_back(data.class_labels[i]);
    } else {
        b.reg_targets.reserve(idx.size());
        for (std::size_t i : idx) b.reg_targets.push_back(data.reg_targets[i]);
    }
    return b;
}

/// Seeded mini-batch stream over one split. Each epoch is a fresh
/// shuffle-without-replacement; every index appears exactly once per epoch
/// (the final batch of an epoch may be short when the batch size does not
/// divide the split size).
struct BatchStream {
    std::vector<std::size_t> split_indices;
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;

    std::vector<std::size_t> order;
    std::size_t pos = 0;
    std::uint64_t epoch = 0;

    BatchStream(std::vector<std::size_t> indices, std::size_t batch, std::uint64_t seed_)
        : split_indices(std::move(indices)), batch_size(batch), seed(seed_) {
        if (split_indices.empty()) throw ConfigError("batch stream: empty split");
        if (batch_size == 0 || batch_size > split_indices.size())
            throw ConfigError("batch stream: batch_size " + std::to_string(batch_size) +
                              " outside [1, " + std::to_string(split_indices.size()) + "]");
        reshuffle();
    }

    void reshuffle() {
        order = split_indices;
        auto rng = make_rng(seed, {0xba7c4, epoch});
        std::shuffle(order.begin(), order.end(), rng);
        pos = 0;
    }
};

/// Return the next shuffled slice, reshuffling at each epoch boundary with a
/// fresh deterministic sub-seed.
inline Batch next_batch(BatchStream& stream, const Dataset& data) {
    if (stream.pos >= stream.order.size()) {
        ++stream.epoch;
        stream.reshuffle();
    }
    const std::size_t take = std::min(stream.batch_size, stream.order.size() - stream.pos);
    std::vector<std::size_t> idx(stream.order.begin() + stream.pos, stream.order.begin() + stream.pos + take);
    stream.pos += take;
    return gather(data, idx);
}

// ---------------------------------------------------------------------------
// IDX files (MNIST container format). Big-endian; images magic 0x00000803
// with dims [count, rows, cols]; labels magic 0x00000801. Files may be
// gzip-compressed; zlib reads raw files transparently as well.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<unsigned char> read_file_maybe_gz(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes;
    unsigned char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw IoError("read failed on " + path);
    return bytes;
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& path) {
    if (off + 4 > b.size())
        throw ParseError(path + ": truncated at byte " + std::to_string(b.size()) + ", need 4 bytes at offset " +
                         std::to_string(off));
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) | (std::uint32_t(b[off + 2]) << 8) |
           std::uint32_t(b[off + 3]);
}

} // namespace detail

/// Load an MNIST-style IDX image/label pair. Pixels are scaled to [0,1] by
/// /255; labels must lie in 0..9. Accepts gzip-compressed or raw files.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = detail::read_file_maybe_gz(images_path);
    const auto lbl = detail::read_file_maybe_gz(labels_path);

    const std::uint32_t img_magic = detail::be32(img, 0, images_path);
    if (img_magic != 0x00000803u)
        throw ParseError(images_path + ": bad magic 0x" + std::to_string(img_magic) + " at byte 0 (want 0x00000803)");
    const std::uint32_t n_img = detail::be32(img, 4, images_path);
    const std::uint32_t rows = detail::be32(img, 8, images_path);
    const std::uint32_t cols = detail::be32(img, 12, images_path);
    const std::size_t pixels = std::size_t(n_img) * rows * cols;
    if (img.size() != 16 + pixels)
        throw ParseError(images_path + ": payload has " + std::to_string(img.size() - 16) + " bytes at byte 16, want " +
                         std::to_string(pixels));

    const std::uint32_t lbl_magic = detail::be32(lbl, 0, labels_path);
    if (lbl_magic != 0x00000801u)
        throw ParseError(labels_path + ": bad magic 0x" + std::to_string(lbl_magic) + " at byte 0 (want 0x00000801)");
    const std::uint32_t n_lbl = detail::be32(lbl, 4, labels_path);
    if (lbl.size() != 8 + n_lbl)
        throw ParseError(labels_path + ": payload has " + std::to_string(lbl.size() - 8) + " bytes at byte 8, want " +
                         std::to_string(n_lbl));
    if (n_img != n_lbl)
        throw ParseError(images_path + ": image count " + std::to_string(n_img) + " != label count " +
                         std::to_string(n_lbl) + " (label file byte 4)");

    Dataset d;
    d.kind = TaskKind::Classification;
    d.n_classes = 10;
    d.features = DenseMatrix(n_img, std::size_t(rows) * cols);
    for (std::size_t i = 0; i < pixels; ++i) d.features.data[i] = img[16 + i] / 255.0;
    d.class_labels.resize(n_lbl);
    for (std::size_t i = 0; i < n_lbl; ++i) {
        const unsigned char v = lbl[8 + i];
        if (v > 9)
            throw ParseError(labels_path + ": label " + std::to_string(int(v)) + " out of range at byte " +
                             std::to_string(8 + i));
        d.class_labels[i] = v;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

/// Ridge-regression problem with a known generating model: X and the true
/// weights are standard normal and y = X w* + noise. Gives an analytic
/// best-response oracle for tests.
inline Dataset make_ridge_synthetic(std::size_t n, std::size_t d, double noise_sd, std::uint64_t seed) {
    if (n < 1 || d < 1) throw ConfigError("ridge synthetic: n and d must be >= 1");
    if (noise_sd < 0) throw ConfigError("ridge synthetic: noise_sd must be >= 0");
    auto rng = make_rng(seed, {0x71d9e});
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseVector w(d);
    for (double& x : w) x = normal(rng);
    Dataset data;
    data.kind = TaskKind::Regression;
    data.features = DenseMatrix(n, d);
    for (double& x : data.features.data) x = normal(rng);
    data.reg_targets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double y = 0.0;
        const double* row = data.features.row(i);
        for (std::size_t j = 0; j < d; ++j) y += row[j] * w[j];
        data.reg_targets[i] = y + noise_sd * normal(rng);
    }
    return data;
}

/// Synthetic 28x28 ten-class image problem used where real MNIST files are
/// not available. Each class is a fixed arrangement of soft blobs; examples
/// add positional jitter and pixel noise so that small training sets overfit
/// and weight decay matters.
inline Dataset make_digits_synthetic(std::size_t n, std::uint64_t seed) {
    constexpr std::size_t kSide = 28;
    constexpr std::size_t kClasses = 10;
    auto class_rng = make_rng(seed, {0xd161});
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Three blob centres per class, fixed for the whole dataset.
    struct Blob {
        double r, c, amp;
    };
    std::vector<std::array<Blob, 3>> blobs(kClasses);
    for (auto& set : blobs)
        for (auto& b : set) {
            b.r = 4.0 + 20.0 * unit(class_rng);
            b.c = 4.0 + 20.0 * unit(class_rng);
            b.amp = 0.7 + 0.3 * unit(class_rng);
        }

    Dataset d;
    d.kind = TaskKind::Classification;
    d.n_classes = kClasses;
    d.features = DenseMatrix(n, kSide * kSide);
    d.class_labels.resize(n);
    auto rng = make_rng(seed, {0xd162});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = int(i % kClasses);
        d.class_labels[i] = cls;
        double* px = d.features.row(i);
        const double jr = normal(rng), jc = normal(rng);
        for (std::size_t r = 0; r < kSide; ++r)
            for (std::size_t c = 0; c < kSide; ++c) {
                double v = 0.0;
                for (const Blob& b : blobs[cls]) {
                    const double dr = double(r) - (b.r + jr);
                    const double dc = double(c) - (b.c + jc);
                    v += b.amp * std::exp(-(dr * dr + dc * dc) / 18.0);
                }
                v += 0.1 * normal(rng);
                px[r * kSide + c] = std::clamp(v, 0.0, 1.0);
            }
    }
    return d;
}

} // namespace hypertrain

#endif
