#include "wmsim/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wmsim/parallel.hpp"

namespace wmsim {

MomentTable::MomentTable(std::size_t n_steps, std::vector<MomentEntry> entries)
    : n_steps_(n_steps), entries_(std::move(entries)) {}

const MomentEntry &MomentTable::at(std::vector<int> steps) const {
    std::sort(steps.begin(), steps.end());
    for (const auto &e : entries_) {
        if (e.steps == steps) {
            return e;
        }
    }
    throw std::out_of_range("MomentTable: no moment " + label(steps));
}

std::string MomentTable::label(const std::vector<int> &steps) {
    std::string s;
    for (int k : steps) {
        s += "a" + std::to_string(k + 1);
    }
    return s;
}

std::vector<std::vector<int>> moment_index_sets(std::size_t n_steps) {
    std::vector<std::vector<int>> sets;
    const int n = static_cast<int>(n_steps);
    for (int i = 0; i < n; ++i) {
        sets.push_back({i});
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            sets.push_back({i, j});
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            for (int k = j; k < n; ++k) {
                sets.push_back({i, j, k});
            }
        }
    }
    return sets;
}

MomentAccumulator::MomentAccumulator(std::size_t n_steps, double noise_variance)
    : n_steps_(n_steps), noise_variance_(noise_variance), sets_(moment_index_sets(n_steps)) {
    if (n_steps == 0) {
        throw std::invalid_argument("MomentAccumulator: no steps");
    }
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
        throw std::invalid_argument("MomentAccumulator: noise variance must be finite and nonnegative");
    }
    total_.sum.assign(sets_.size(), 0.0);
    total_.sum_sq.assign(sets_.size(), 0.0);
}

MomentAccumulator::Partial MomentAccumulator::accumulate(std::span<const double> rows) const {
    Partial p;
    p.sum.assign(sets_.size(), 0.0);
    p.sum_sq.assign(sets_.size(), 0.0);
    const double s = noise_variance_;
    const std::size_t n_rows = rows.size() / n_steps_;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const double *q = rows.data() + r * n_steps_;
        for (std::size_t m = 0; m < sets_.size(); ++m) {
            const auto &idx = sets_[m];
            double h = 0.0;
            switch (idx.size()) {
            case 1:
                h = q[idx[0]];
                break;
            case 2:
                h = q[idx[0]] * q[idx[1]] - (idx[0] == idx[1] ? s : 0.0);
                break;
            default: {
                const int i = idx[0], j = idx[1], k = idx[2];
                double correction = 0.0;
                if (i == j) {
                    correction += q[k];
                }
                if (i == k) {
                    correction += q[j];
                }
                if (j == k) {
                    correction += q[i];
                }
                h = q[i] * q[j] * q[k] - s * correction;
                break;
            }
            }
            p.sum[m] += h;
            p.sum_sq[m] += h * h;
        }
    }
    p.count = n_rows;
    return p;
}

void MomentAccumulator::merge(const Partial &p) {
    total_.count += p.count;
    for (std::size_t m = 0; m < sets_.size(); ++m) {
        total_.sum[m] += p.sum[m];
        total_.sum_sq[m] += p.sum_sq[m];
    }
}

MomentTable MomentAccumulator::finish() const {
    if (total_.count < 2) {
        throw std::invalid_argument("deconvolved moments need at least 2 samples");
    }
    const auto n = static_cast<double>(total_.count);
    std::vector<MomentEntry> entries;
    entries.reserve(sets_.size());
    for (std::size_t m = 0; m < sets_.size(); ++m) {
        const double mean = total_.sum[m] / n;
        const double var = std::max(0.0, (total_.sum_sq[m] - n * mean * mean) / (n - 1.0));
        entries.push_back({sets_[m], mean, std::sqrt(var / n)});
    }
    return MomentTable(n_steps_, std::move(entries));
}

MomentTable deconvolved_moments(const SampleBatch &batch, double noise_variance, unsigned threads) {
    if (batch.n_samples < 2) {
        throw std::invalid_argument("deconvolved_moments: need at least 2 samples");
    }
    if (batch.outcomes.size() != batch.n_samples * batch.n_steps) {
        throw std::invalid_argument("deconvolved_moments: batch dimensions inconsistent");
    }
    MomentAccumulator acc(batch.n_steps, noise_variance);
    std::vector<MomentAccumulator::Partial> partials(chunk_count(batch.n_samples, kMomentChunk));
    parallel_chunks(batch.n_samples, kMomentChunk, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        partials[c] = acc.accumulate(std::span<const double>(batch.outcomes)
                                         .subspan(begin * batch.n_steps, (end - begin) * batch.n_steps));
    });
    for (const auto &p : partials) {
        acc.merge(p);
    }
    return acc.finish();
}

} // namespace wmsim
