#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lsg/tensor.hpp"

namespace lsg {

// Immutable multivariate series, rows in time order.
struct Dataset {
    Tensor values;  // [T x C]
    std::vector<std::string> channel_names;
    std::string frequency_label;
    // Absolute index of row 0 in the parent series (0 for freshly loaded
    // data; split segments carry their offset so evaluation can align
    // against full-length ground-truth traces).
    std::size_t start_offset = 0;

    std::size_t T() const { return values.rows(); }
    std::size_t C() const { return values.cols(); }
};

// One (look-back, horizon) pair; slices are copies of adjacent ranges.
struct SeriesWindow {
    Tensor lookback;  // [L x C]
    Tensor horizon;   // [H x C]
    std::size_t origin_index = 0;
};

// Non-overlapping patches covering a (possibly left-padded) look-back.
struct PatchGrid {
    Tensor patches;       // [N x P x C]
    std::size_t N = 0;    // patch count
    std::size_t P = 0;    // patch length
    std::size_t C = 0;
    std::size_t L = 0;    // unpadded look-back length; pad = N*P - L
};

struct SyntheticSpec {
    enum class Kind { regime_switching, periodic };
    Kind kind = Kind::regime_switching;
    std::size_t length = 4000;
    double dt = 0.1;
    std::uint64_t seed = 0;
    std::size_t regime_len = 100;  // regime kind only
};

struct CsvOptions {
    // First column is always skipped when its header is "date" or "index"
    // (case-insensitive); this forces skipping regardless of name.
    bool skip_first_column = false;
};

Dataset load_csv(const std::string& path, const CsvOptions& options = {});
void save_csv(const Dataset& ds, const std::string& path);

// Contiguous chronological split, train earliest. Boundary indices are
// floors of the cumulative ratios. min_len > 0 additionally requires every
// segment to hold at least that many rows (callers pass L+H).
std::array<Dataset, 3> chrono_split(const Dataset& ds, double train, double val, double test,
                                    std::size_t min_len = 0);

// All windows with origin 0, stride, 2*stride, ... while origin+L+H <= T.
std::vector<SeriesWindow> windows(const Dataset& ds, std::size_t L, std::size_t H,
                                  std::size_t stride);

// Segment a look-back into patches of length P, left-padding by repeating
// the first row when P does not divide L.
PatchGrid patch(const Tensor& lookback, std::size_t P);
// Exact inverse on the unpadded region: returns [L x C].
Tensor unpatch(const PatchGrid& grid);

// y_i = sin(i*dt) + sigma_i * eps_i with seeded standard-normal noise.
// Returns the univariate series and the ground-truth sigma trace.
std::pair<Dataset, Tensor> gen_synthetic(const SyntheticSpec& spec);
double synthetic_sigma(const SyntheticSpec& spec, std::size_t i);

// Per-channel affine transform fitted on the training split (population
// statistics, std floored) and applied to every split before windowing.
struct Standardizer {
    Tensor mean;  // [C]
    Tensor std;   // [C]

    static Standardizer fit(const Dataset& train, double eps = 1e-8);
    static Standardizer identity(std::size_t C);
    Dataset apply(const Dataset& ds) const;
    // Inverse transform of a [T x C] block back to original units.
    Tensor invert(const Tensor& x) const;
    Tensor invert_scale(const Tensor& s) const;
};

} // namespace lsg
