#pragma once

// Sample batches of detector readings and deconvolution of independent
// additive Gaussian noise from their mixed moments. Shared by the quantum and
// classical engines.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wmsim {

/// n_samples x n_steps readings in a-units, sample-major.
struct SampleBatch {
    std::size_t n_samples = 0;
    std::size_t n_steps = 0;
    std::vector<double> outcomes;
    double g = 0.0;
    std::uint64_t seed = 0;

    std::span<const double> row(std::size_t sample) const {
        return std::span<const double>(outcomes).subspan(sample * n_steps, n_steps);
    }
};

struct MomentEntry {
    std::vector<int> steps; // nondecreasing step indices, size 1..3
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Mixed moments <a_i>, <a_i a_j>, <a_i a_j a_k> (i <= j <= k) with standard
/// errors of the sample-mean estimators.
class MomentTable {
public:
    MomentTable() = default;
    MomentTable(std::size_t n_steps, std::vector<MomentEntry> entries);

    std::size_t n_steps() const { return n_steps_; }
    const std::vector<MomentEntry> &entries() const { return entries_; }

    /// Entry for the multiset of step indices (order-insensitive). Throws
    /// std::out_of_range if absent.
    const MomentEntry &at(std::vector<int> steps) const;
    double value(std::vector<int> steps) const { return at(std::move(steps)).value; }
    double stderr_of(std::vector<int> steps) const { return at(std::move(steps)).stderr_; }

    static std::string label(const std::vector<int> &steps);

private:
    std::size_t n_steps_ = 0;
    std::vector<MomentEntry> entries_;
};

/// All nondecreasing index tuples of length 1..3 over n_steps steps, in the
/// order the moment table stores them.
std::vector<std::vector<int>> moment_index_sets(std::size_t n_steps);

/// Accumulates per-sample deconvolved statistics chunk by chunk. Feeding the
/// same rows in the same chunking always produces bitwise identical tables.
class MomentAccumulator {
public:
    MomentAccumulator(std::size_t n_steps, double noise_variance);

    /// Sums over a block of rows (row-major, n_steps per row). Returns the
    /// partial sums to be merged later with merge() in a fixed order.
    struct Partial {
        std::size_t count = 0;
        std::vector<double> sum;
        std::vector<double> sum_sq;
    };
    Partial accumulate(std::span<const double> rows) const;
    void merge(const Partial &p);

    MomentTable finish() const;

private:
    std::size_t n_steps_;
    double noise_variance_;
    std::vector<std::vector<int>> sets_;
    Partial total_;
};

/// Chunk size (rows) used by every moment reduction in the library.
inline constexpr std::size_t kMomentChunk = 1u << 15;

/// Mixed moments up to order 3 with independent zero-mean Gaussian noise of the
/// given per-step variance removed. Throws std::invalid_argument for fewer than
/// two samples.
MomentTable deconvolved_moments(const SampleBatch &batch, double noise_variance, unsigned threads = 0);

} // namespace wmsim
