#include "dtsc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dtsc/numerics.hpp"

namespace dtsc {

namespace {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng.next_u64() % i;
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

std::vector<std::size_t> Dataset::indices_of(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(i);
  }
  return out;
}

Dataset make_blobs(const BlobsSpec& spec, std::uint64_t seed) {
  const std::size_t c = spec.train_per_class.size();
  if (c < 2) throw Error("make_blobs: need at least 2 classes");
  if (spec.val_per_class.size() != c || spec.test_per_class.size() != c) {
    throw Error("make_blobs: per-class count lists must have equal length");
  }
  if (spec.dim < 2) throw Error("make_blobs: dim must be >= 2");
  if (spec.cluster_std <= 0.0) throw Error("make_blobs: cluster std must be positive");
  for (std::size_t k = 0; k < c; ++k) {
    if (spec.train_per_class[k] < 1 || spec.test_per_class[k] < 1 ||
        spec.val_per_class[k] < 0) {
      throw Error("make_blobs: every class needs train and test samples");
    }
  }

  Rng root(seed);
  Rng center_rng = root.stream("blobs.centers");
  Matrix centers(c, spec.dim);
  center_rng.fill_uniform(centers, -spec.center_spread, spec.center_spread);

  std::size_t total = 0;
  for (std::size_t k = 0; k < c; ++k) {
    total += static_cast<std::size_t>(spec.train_per_class[k] + spec.val_per_class[k] +
                                      spec.test_per_class[k]);
  }

  Dataset ds;
  ds.inputs = Matrix(total, spec.dim);
  ds.labels.reserve(total);
  ds.split.reserve(total);
  ds.class_count = static_cast<int>(c);

  Rng sample_rng = root.stream("blobs.samples");
  std::size_t row = 0;
  auto emit = [&](Split s, const std::vector<int>& counts) {
    for (std::size_t k = 0; k < c; ++k) {
      for (int i = 0; i < counts[k]; ++i) {
        auto r = ds.inputs.row(row);
        for (std::size_t j = 0; j < r.size(); ++j) {
          r[j] = centers(k, j) + sample_rng.normal(0.0, spec.cluster_std);
        }
        ds.labels.push_back(static_cast<int>(k));
        ds.split.push_back(s);
        ++row;
      }
    }
  };
  emit(Split::train, spec.train_per_class);
  emit(Split::val, spec.val_per_class);
  emit(Split::test, spec.test_per_class);
  return ds;
}

Dataset make_moons_embedded(const MoonsSpec& spec, std::uint64_t seed) {
  for (int n : {spec.train_n, spec.test_n}) {
    if (n < 4 || n % 2 != 0) throw Error("make_moons_embedded: counts must be even and >= 4");
  }
  if (spec.val_n < 0 || spec.val_n % 2 != 0) {
    throw Error("make_moons_embedded: val count must be even");
  }
  if (spec.ambient_dim < 2) throw Error("make_moons_embedded: ambient dim must be >= 2");
  if (spec.noise_std < 0.0) throw Error("make_moons_embedded: noise std must be non-negative");

  Rng root(seed);
  Rng noise_rng = root.stream("moons.noise");

  // Orthonormal ambient_dim x 2 embedding via Gram-Schmidt on Gaussian draws.
  Rng embed_rng = root.stream("moons.embed");
  const std::size_t d = static_cast<std::size_t>(spec.ambient_dim);
  std::vector<double> e1(d), e2(d);
  for (;;) {
    for (double& v : e1) v = embed_rng.normal();
    const double n1 = norm2(e1);
    if (n1 <= 1e-6) continue;
    for (double& v : e1) v /= n1;
    for (double& v : e2) v = embed_rng.normal();
    const double proj = dot(std::span<const double>(e2), std::span<const double>(e1));
    for (std::size_t j = 0; j < d; ++j) e2[j] -= proj * e1[j];
    const double n2 = norm2(e2);
    if (n2 <= 1e-6) continue;
    for (double& v : e2) v /= n2;
    break;
  }

  const std::size_t total =
      static_cast<std::size_t>(spec.train_n + spec.val_n + spec.test_n);
  Dataset ds;
  ds.inputs = Matrix(total, d);
  ds.labels.reserve(total);
  ds.split.reserve(total);
  ds.class_count = 2;

  std::size_t row = 0;
  auto emit = [&](Split s, int n) {
    const int half = n / 2;
    for (int cls = 0; cls < 2; ++cls) {
      for (int i = 0; i < half; ++i) {
        const double t =
            half == 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / (half - 1);
        double px, py;
        if (cls == 0) {
          px = std::cos(t);
          py = std::sin(t);
        } else {
          px = 1.0 - std::cos(t);
          py = 0.5 - std::sin(t);
        }
        if (spec.noise_std > 0.0) {
          px += noise_rng.normal(0.0, spec.noise_std);
          py += noise_rng.normal(0.0, spec.noise_std);
        }
        auto r = ds.inputs.row(row);
        for (std::size_t j = 0; j < d; ++j) r[j] = px * e1[j] + py * e2[j];
        ds.labels.push_back(cls);
        ds.split.push_back(s);
        ++row;
      }
    }
  };
  emit(Split::train, spec.train_n);
  if (spec.val_n > 0) emit(Split::val, spec.val_n);
  emit(Split::test, spec.test_n);
  return ds;
}

std::vector<int> long_tail_counts(int total) {
  if (total < static_cast<int>(kLongTailProportions.size())) {
    throw Error("long_tail_counts: total too small for 8 classes");
  }
  std::vector<int> counts;
  for (double p : kLongTailProportions) {
    counts.push_back(std::max(1, static_cast<int>(std::llround(p * total))));
  }
  return counts;
}

SemiSplit::SemiSplit(std::vector<std::size_t> labeled, std::vector<int> labeled_labels,
                     std::vector<std::size_t> unlabeled)
    : labeled_(std::move(labeled)),
      labels_(std::move(labeled_labels)),
      unlabeled_(std::move(unlabeled)) {
  if (labeled_.size() != labels_.size()) {
    throw Error("SemiSplit: labeled indices and labels misaligned");
  }
}

bool SemiSplit::is_labeled(std::size_t idx) const {
  return std::find(labeled_.begin(), labeled_.end(), idx) != labeled_.end();
}

int SemiSplit::label_of(std::size_t idx) const {
  for (std::size_t i = 0; i < labeled_.size(); ++i) {
    if (labeled_[i] == idx) return labels_[i];
  }
  throw Error("SemiSplit::label_of: sample " + std::to_string(idx) +
              " is not in the labeled set");
}

SemiSplit split_semi(const Dataset& dataset, double labeled_fraction, std::uint64_t seed) {
  if (labeled_fraction <= 0.0 || labeled_fraction > 1.0) {
    throw Error("split_semi: labeled fraction must lie in (0, 1]");
  }
  std::vector<std::vector<std::size_t>> per_class(dataset.class_count);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.split[i] == Split::train) per_class[dataset.labels[i]].push_back(i);
  }
  for (int k = 0; k < dataset.class_count; ++k) {
    if (per_class[k].empty()) {
      throw Error("split_semi: class " + std::to_string(k) + " has no train samples");
    }
  }

  Rng rng = Rng(seed).stream("semi");
  std::vector<std::size_t> labeled, unlabeled;
  std::vector<int> labels;
  for (int k = 0; k < dataset.class_count; ++k) {
    auto idx = per_class[k];
    shuffle_indices(idx, rng);
    const auto n_lab = static_cast<std::size_t>(
        std::llround(labeled_fraction * static_cast<double>(idx.size())));
    if (n_lab == 0) {
      throw Error("split_semi: fraction yields zero labeled samples for class " +
                  std::to_string(k));
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i < n_lab) {
        labeled.push_back(idx[i]);
        labels.push_back(k);
      } else {
        unlabeled.push_back(idx[i]);
      }
    }
  }
  std::sort(unlabeled.begin(), unlabeled.end());
  // Keep labeled sorted too (with labels riding along) for stable iteration.
  std::vector<std::size_t> order(labeled.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return labeled[a] < labeled[b]; });
  std::vector<std::size_t> sorted_labeled(labeled.size());
  std::vector<int> sorted_labels(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted_labeled[i] = labeled[order[i]];
    sorted_labels[i] = labels[order[i]];
  }
  return SemiSplit(std::move(sorted_labeled), std::move(sorted_labels), std::move(unlabeled));
}

Matrix perturb(const Matrix& x, double std, Rng& rng) {
  if (std < 0.0) throw Error("perturb: std must be non-negative");
  if (std == 0.0) return x;
  Matrix out = x;
  for (double& v : out.flat()) v += rng.normal(0.0, std);
  return out;
}

std::vector<Batch> batch_iter(const SemiSplit& split, int batch_size, int labeled_per_batch,
                              Rng& rng) {
  if (split.labeled().empty()) throw Error("batch_iter: labeled pool is empty");
  if (batch_size < 1 || labeled_per_batch < 1 || labeled_per_batch > batch_size) {
    throw Error("batch_iter: invalid batch composition");
  }
  const bool have_unlabeled = !split.unlabeled().empty();
  const int lab_n = have_unlabeled ? labeled_per_batch : batch_size;
  const std::size_t total = split.labeled().size() + split.unlabeled().size();
  const std::size_t n_batches =
      (total + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size);

  std::vector<std::size_t> lab_pool = split.labeled();
  std::vector<std::size_t> unl_pool = split.unlabeled();
  shuffle_indices(lab_pool, rng);
  shuffle_indices(unl_pool, rng);
  std::size_t lab_pos = 0, unl_pos = 0;
  auto next_from = [&rng](std::vector<std::size_t>& pool, std::size_t& pos) {
    if (pos == pool.size()) {
      shuffle_indices(pool, rng);
      pos = 0;
    }
    return pool[pos++];
  };

  std::vector<Batch> batches(n_batches);
  for (auto& batch : batches) {
    for (int i = 0; i < lab_n; ++i) {
      batch.indices.push_back(next_from(lab_pool, lab_pos));
      batch.labeled_mask.push_back(1);
    }
    for (int i = lab_n; i < batch_size; ++i) {
      batch.indices.push_back(next_from(unl_pool, unl_pos));
      batch.labeled_mask.push_back(0);
    }
  }
  return batches;
}

void save_dataset_csv(const std::string& path, const Dataset& dataset, const SemiSplit* semi) {
  std::ofstream out(path);
  if (!out) throw Error("save_dataset_csv: cannot open " + path);
  for (std::size_t j = 0; j < dataset.dim(); ++j) out << "x_" << j << ",";
  out << "label,split,semi_tag\n";
  char buf[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto r = dataset.inputs.row(i);
    for (double v : r) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ",";
    }
    const char* tag = "none";
    if (semi && dataset.split[i] == Split::train) {
      tag = semi->is_labeled(i) ? "labeled" : "unlabeled";
    }
    out << dataset.labels[i] << "," << split_name(dataset.split[i]) << "," << tag << "\n";
  }
  if (!out) throw Error("save_dataset_csv: write failed for " + path);
}

LoadedDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("load_dataset_csv: empty file " + path);

  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(header, col, ',')) cols.push_back(col);
    if (cols.size() < 4) throw Error("load_dataset_csv: malformed header");
    dim = cols.size() - 3;
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<Split> splits;
  std::vector<std::uint8_t> tags;
  int max_label = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    for (std::size_t j = 0; j < dim; ++j) {
      if (!std::getline(row, cell, ',')) throw Error("load_dataset_csv: short row");
      values.push_back(std::stod(cell));
    }
    if (!std::getline(row, cell, ',')) throw Error("load_dataset_csv: missing label");
    labels.push_back(std::stoi(cell));
    max_label = std::max(max_label, labels.back());
    if (!std::getline(row, cell, ',')) throw Error("load_dataset_csv: missing split");
    if (cell == "train") splits.push_back(Split::train);
    else if (cell == "val") splits.push_back(Split::val);
    else if (cell == "test") splits.push_back(Split::test);
    else throw Error("load_dataset_csv: unknown split tag '" + cell + "'");
    if (!std::getline(row, cell, ',')) throw Error("load_dataset_csv: missing semi tag");
    if (cell == "labeled") tags.push_back(1);
    else if (cell == "unlabeled") tags.push_back(0);
    else if (cell == "none") tags.push_back(2);
    else throw Error("load_dataset_csv: unknown semi tag '" + cell + "'");
  }

  LoadedDataset loaded;
  loaded.dataset.inputs = Matrix(labels.size(), dim, std::move(values));
  loaded.dataset.labels = std::move(labels);
  loaded.dataset.split = std::move(splits);
  loaded.dataset.class_count = max_label + 1;
  loaded.semi_tag = std::move(tags);
  ensure_finite(loaded.dataset.inputs, "load_dataset_csv");
  return loaded;
}

std::uint64_t dataset_hash(const Dataset& dataset) {
  std::ostringstream canon;
  canon << dataset.class_count << ";" << dataset.dim() << ";";
  char buf[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.inputs.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      canon << buf << ",";
    }
    canon << dataset.labels[i] << "," << split_name(dataset.split[i]) << ";";
  }
  return fnv1a64(canon.str());
}

}  // namespace dtsc
