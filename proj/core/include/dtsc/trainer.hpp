#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dtsc/consistency.hpp"
#include "dtsc/datagen.hpp"
#include "dtsc/metrics.hpp"
#include "dtsc/network.hpp"
#include "dtsc/scatter.hpp"

namespace dtsc {

enum class Variant { baseline, pure_mt, scmt, dtsc, upper_bound };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct TrainConfig {
  int epochs = 50;
  int scatter_epochs = 10;
  double ema_consistency = 0.9;   // consistency teacher decay
  double ema_scatter = 0.999;     // scatter teacher decay
  double lambda_cl = 0.1;
  double lambda_alc = 1.0;
  double lambda_rlc = 1.0;
  double tau = 0.7;
  std::size_t rsp_capacity = 32;
  std::size_t bank_capacity = 256;
  int batch_size = 16;
  int labeled_per_batch = 4;
  double learning_rate = 2e-3;
  double student_noise_std = 0.5;
  double teacher_noise_std = 0.5;
  std::vector<int> hidden_dims = {64};
  int feature_dim = 32;
  int projection_dim = 0;  // 0 picks max(8, feature_dim / 2)
  std::uint64_t seed = 0;
  Variant variant = Variant::dtsc;
};

// Desk-scale defaults (the values above).
TrainConfig desk_default_train_config();
// The full-size configuration: 100 epochs with a 20-epoch scatter phase,
// batch 64 (16 labeled + 48 unlabeled), lr 1e-4, feature dim = pool = 1024,
// bank 4096.
TrainConfig paper_scale_train_config();

// Ablation arms share every knob except the mechanisms under test.
TrainConfig apply_variant(TrainConfig cfg, Variant v);
TrainConfig ablation_preset(const std::string& name);

// upper_bound trains on every label regardless of the requested fraction.
double effective_labeled_fraction(Variant v, double requested);

void validate_train_config(const TrainConfig& cfg, const Dataset& dataset);

enum class Phase { scatter, consistency };
const char* phase_name(Phase p);

struct Models {
  StudentParams student;
  TeacherState teacher_sc;
  TeacherState teacher_ss;
};

Models init_models(const TrainConfig& cfg, int input_dim, int class_count, Rng& init_rng);

struct Optimizer {
  std::vector<AdamState> states;  // aligned with param_refs order
  AdamConfig adam;
};
Optimizer make_optimizer(const StudentParams& params, double lr);
void apply_grads(StudentParams& params, StudentGrads& grads, Optimizer& opt);

struct StepLosses {
  double total = 0.0;
  double supervised = 0.0;
  std::optional<double> alc;
  std::optional<double> rlc;
  std::optional<double> cl;
};

struct SupervisedLoss {
  double value = 0.0;
  Matrix d_logits;
  std::size_t labeled_count = 0;
};

// Mean cross-entropy over the labeled rows; unlabeled rows contribute
// nothing. labels entries for unlabeled rows are never read.
SupervisedLoss supervised_loss(const Matrix& logits, std::span<const int> labels,
                               std::span<const std::uint8_t> labeled_mask);

// Pure loss/gradient cores over pre-perturbed views. Teachers, pool slots
// and bank entries are constants; these are what the finite-difference
// checks drive.
struct ScatterLossGrads {
  StepLosses losses;
  StudentGrads grads;
  Matrix keys;  // normalized teacher keys for the bank enqueue
};
ScatterLossGrads scatter_losses(const StudentParams& student, const TeacherState& teacher_ss,
                                const Matrix& x_student_view, const Matrix& x_teacher_view,
                                std::span<const int> labels,
                                std::span<const std::uint8_t> labeled_mask,
                                const Matrix& bank_slots, double lambda_cl, double tau);

struct ConsistencyLossGrads {
  StepLosses losses;
  StudentGrads grads;
  Matrix teacher_features;  // consistency-teacher A' for the pool enqueue
};
ConsistencyLossGrads consistency_losses(const StudentParams& student,
                                        const TeacherState& teacher_sc,
                                        const Matrix& x_student_view,
                                        const Matrix& x_teacher_view,
                                        std::span<const int> labels,
                                        std::span<const std::uint8_t> labeled_mask,
                                        const Matrix& rsp_slots, double lambda_alc,
                                        double lambda_rlc);

// One optimizer step of the scatter phase: supervised + contrastive loss,
// Adam, bank and pool enqueues, then EMA of both teachers.
StepLosses scatter_step(Models& models, Optimizer& opt, MemoryBank& bank,
                        ReferenceSamplePool& rsp, const Matrix& batch_x,
                        std::span<const int> labels, std::span<const std::uint8_t> labeled_mask,
                        const TrainConfig& cfg, Rng& noise_student, Rng& noise_sc,
                        Rng& noise_ss);

// One optimizer step of the consistency phase: supervised + AL-c + RL-c
// against the pre-step pool snapshot, Adam, pool enqueue, then EMA of both
// teachers.
StepLosses consistency_step(Models& models, Optimizer& opt, ReferenceSamplePool& rsp,
                            const Matrix& batch_x, std::span<const int> labels,
                            std::span<const std::uint8_t> labeled_mask, const TrainConfig& cfg,
                            Rng& noise_student, Rng& noise_sc);

struct EpochRow {
  int epoch = 0;
  Phase phase = Phase::consistency;
  double loss_s = 0.0;
  std::optional<double> loss_alc;
  std::optional<double> loss_rlc;
  std::optional<double> loss_cl;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> macro_auc;
  double mean_pairwise_cosine = 0.0;  // over test-set features
};

struct RunResult {
  std::vector<EpochRow> trace;
  MetricsReport final_test;
  StudentParams final_student;
  TrainConfig config;
  std::uint64_t data_hash = 0;
  Matrix boundary_test_features;  // at the scatter/consistency boundary
  Matrix final_test_features;
  Matrix final_pool_snapshot;
  std::vector<int> test_labels;
};

RunResult run_experiment(const TrainConfig& cfg, const Dataset& dataset,
                         const SemiSplit& split);

struct Evaluation {
  MetricsReport report;
  Matrix features;
};

// Noise-free student forward on a split; argmax predictions, softmax scores.
Evaluation evaluate(const NetworkParams& net, const Dataset& dataset, Split which);

// Metrics CSV with the per-epoch schema:
// epoch,phase,loss_s,loss_alc,loss_rlc,loss_cl,accuracy,macro_f1,macro_auc,
// mean_pairwise_cosine. Components that were not part of the phase loss stay
// empty.
void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& trace);

}  // namespace dtsc
