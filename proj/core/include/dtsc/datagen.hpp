#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dtsc/matrix.hpp"
#include "dtsc/rng.hpp"

namespace dtsc {

enum class Split { train, val, test };

struct Dataset {
  Matrix inputs;            // n x dim
  std::vector<int> labels;  // class indices in [0, class_count)
  std::vector<Split> split;
  int class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return inputs.cols(); }
  std::vector<std::size_t> indices_of(Split s) const;
};

struct BlobsSpec {
  std::vector<int> train_per_class;
  std::vector<int> val_per_class;
  std::vector<int> test_per_class;
  int dim = 16;
  double center_spread = 2.0;
  double cluster_std = 1.0;
};

// Isotropic Gaussian clusters around centers drawn once uniformly in
// [-center_spread, center_spread]^dim.
Dataset make_blobs(const BlobsSpec& spec, std::uint64_t seed);

struct MoonsSpec {
  int train_n = 400;  // each count even, split evenly across the two classes
  int val_n = 100;
  int test_n = 200;
  double noise_std = 0.1;
  int ambient_dim = 2;
};

// Two interleaved half-circles in 2D plus Gaussian noise, embedded into
// ambient_dim through a seeded random orthogonal map (an isometry).
Dataset make_moons_embedded(const MoonsSpec& spec, std::uint64_t seed);

// Class proportions of the long-tailed 8-class preset, largest first.
inline constexpr std::array<double, 8> kLongTailProportions = {
    0.508, 0.179, 0.131, 0.104, 0.034, 0.025, 0.009, 0.009};

std::vector<int> long_tail_counts(int total);

// Stratified labeled/unlabeled partition of the train split. Labels of
// unlabeled samples are not reachable through this surface: label_of throws
// for anything outside the labeled set.
class SemiSplit {
 public:
  SemiSplit(std::vector<std::size_t> labeled, std::vector<int> labeled_labels,
            std::vector<std::size_t> unlabeled);

  const std::vector<std::size_t>& labeled() const { return labeled_; }
  const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }
  bool is_labeled(std::size_t idx) const;
  int label_of(std::size_t idx) const;

 private:
  std::vector<std::size_t> labeled_;
  std::vector<int> labels_;  // aligned with labeled_
  std::vector<std::size_t> unlabeled_;
};

SemiSplit split_semi(const Dataset& dataset, double labeled_fraction, std::uint64_t seed);

// x + iid Gaussian(0, std); std = 0 returns x bit-identically without
// consuming the rng.
Matrix perturb(const Matrix& x, double std, Rng& rng);

struct Batch {
  std::vector<std::size_t> indices;
  std::vector<std::uint8_t> labeled_mask;  // aligned with indices
};

// One epoch of batches: labeled_per_batch labeled draws plus unlabeled
// fills, pools shuffled per epoch, the smaller pool cycling (reshuffled on
// wrap). Epoch length = ceil(total / batch_size). An empty unlabeled pool
// produces fully labeled batches.
std::vector<Batch> batch_iter(const SemiSplit& split, int batch_size, int labeled_per_batch,
                              Rng& rng);

// CSV schema: x_0..x_{dim-1}, label, split, semi_tag.
void save_dataset_csv(const std::string& path, const Dataset& dataset, const SemiSplit* semi);
struct LoadedDataset {
  Dataset dataset;
  std::vector<std::uint8_t> semi_tag;  // 1 labeled, 0 unlabeled, 2 none
};
LoadedDataset load_dataset_csv(const std::string& path);

// Content hash over inputs, labels and split tags (the semi split is
// deliberately excluded, so re-splits of one dataset share the hash).
std::uint64_t dataset_hash(const Dataset& dataset);

}  // namespace dtsc
