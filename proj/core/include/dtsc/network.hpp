#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dtsc/matrix.hpp"
#include "dtsc/numerics.hpp"
#include "dtsc/rng.hpp"

namespace dtsc {

struct LinearLayer {
  Matrix weights;  // in x out
  Matrix biases;   // 1 x out
};

// Backbone MLP (ReLU after every layer) plus linear classifier head.
// The absolute location feature A is the post-ReLU output of the last
// backbone layer; logits come from the classifier on top of A.
struct NetworkParams {
  std::vector<LinearLayer> backbone;
  LinearLayer classifier;
  int feature_dim = 0;
  int class_count = 0;

  int input_dim() const {
    return backbone.empty() ? 0 : static_cast<int>(backbone.front().weights.rows());
  }
};

// Two-layer ReLU MLP used for the projector and predictor heads.
struct Mlp2 {
  LinearLayer l1;
  LinearLayer l2;
};

// Student-side heads: projector feeds the predictor; only the student has
// the predictor.
struct HeadParams {
  Mlp2 projector;
  Mlp2 predictor;
  int projection_dim = 0;
};

struct StudentParams {
  NetworkParams net;
  HeadParams heads;
};

enum class TeacherRole { sample_consistency, sample_scatter };

// EMA-lagged copy of the student. Only the scatter teacher carries a
// projector (tracking the student's); teachers are never touched by
// gradients.
struct TeacherState {
  NetworkParams net;
  std::optional<Mlp2> projector;
  double epsilon = 0.0;
  TeacherRole role = TeacherRole::sample_consistency;
};

struct ForwardCache {
  Matrix input;                  // x after perturbation
  std::vector<Matrix> pre_acts;  // z per backbone layer
  std::vector<Matrix> acts;      // post-ReLU per backbone layer; back() is A
  Matrix logits;

  const Matrix& features() const { return acts.back(); }
};

struct LayerGrads {
  Matrix d_weights;
  Matrix d_biases;
};

struct NetGrads {
  std::vector<LayerGrads> backbone;
  LayerGrads classifier;
  Matrix d_input;
};

struct HeadsCache {
  Matrix input;       // A_student
  Matrix proj_pre;    // z of projector hidden
  Matrix proj_hidden;
  Matrix proj_out;
  Matrix pred_pre;    // z of predictor hidden
  Matrix pred_hidden;
  Matrix pred_out;    // pre-normalization query
  std::vector<double> pred_norms;
  Matrix q;           // normalized query
};

struct HeadGrads {
  LayerGrads proj_l1, proj_l2;
  LayerGrads pred_l1, pred_l2;
  Matrix d_features;
};

struct StudentGrads {
  NetGrads net;
  HeadGrads heads;
};

// Forward pass under additive Gaussian input noise. noise_std = 0 skips the
// rng entirely and is bit-deterministic.
ForwardCache forward(const NetworkParams& params, const Matrix& x, double noise_std, Rng& rng);
ForwardCache forward(const NetworkParams& params, const Matrix& x);

// Exact gradients of the forward pass. d_features and/or d_logits may be
// zero matrices; both attach to the cached computation.
NetGrads backward(const NetworkParams& params, const ForwardCache& cache,
                  const Matrix& d_features, const Matrix& d_logits);

// q = normalize(Pred(Proj(A_student))); k = normalize(Proj'(A_teacher)).
// k is produced without any cache: the teacher branch carries no gradient.
struct HeadsForward {
  Matrix q;
  Matrix k;
  HeadsCache cache;
};
HeadsForward heads_forward(const HeadParams& heads, const Mlp2& teacher_projector,
                           const Matrix& a_student, const Matrix& a_teacher);

// Teacher-side key projection alone (normalized rows).
Matrix project_keys(const Mlp2& projector, const Matrix& features);

// Gradients of the student head stack given d(loss)/d(q) on the normalized
// query rows.
HeadGrads heads_backward(const HeadParams& heads, const HeadsCache& cache, const Matrix& d_q);

// theta_t <- eps * theta_t + (1 - eps) * theta_s for every tracked matrix.
void ema_update(TeacherState& teacher, const StudentParams& student);

// Xavier-uniform weights, zero biases. projection_dim = 0 picks
// max(8, feature_dim / 2).
StudentParams init_params(int input_dim, const std::vector<int>& hidden_dims, int feature_dim,
                          int class_count, Rng& rng, int projection_dim = 0);

TeacherState make_teacher(const StudentParams& student, double epsilon, TeacherRole role);

// Stable iteration order over all student parameter matrices; grads_refs
// yields the matching gradient matrices.
std::vector<Matrix*> param_refs(StudentParams& params);
std::vector<const Matrix*> param_refs(const StudentParams& params);
std::vector<Matrix*> grad_refs(StudentGrads& grads);
std::vector<std::string> param_names(const StudentParams& params);

StudentGrads zero_grads(const StudentParams& params);

// Text checkpoint: named matrices with shape headers plus the config hash.
void save_checkpoint(const std::string& path, const StudentParams& params,
                     std::uint64_t config_hash);
struct Checkpoint {
  StudentParams params;
  std::uint64_t config_hash = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dtsc
