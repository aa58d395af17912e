#include "dtsc/network.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace dtsc {

namespace {

Matrix linear(const Matrix& x, const LinearLayer& layer) {
  Matrix out = matmul(x, layer.weights);
  add_row_inplace(out, layer.biases);
  return out;
}

Matrix relu(const Matrix& z) {
  Matrix out = z;
  for (double& v : out.flat()) v = v > 0.0 ? v : 0.0;
  return out;
}

// dz = dh masked by the stored pre-activation sign.
Matrix relu_backward(const Matrix& dh, const Matrix& z) {
  Matrix out = dh;
  auto o = out.flat();
  auto zz = z.flat();
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (zz[i] <= 0.0) o[i] = 0.0;
  }
  return out;
}

LayerGrads linear_backward(const Matrix& input, const Matrix& dz) {
  return {matmul_tn(input, dz), col_sums(dz)};
}

void normalize_rows(Matrix& m, std::vector<double>* norms) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    const double n = norm2(r);
    if (n <= kNormFloor) throw Error("normalize_rows: zero-norm row");
    for (double& v : r) v /= n;
    if (norms) norms->push_back(n);
  }
}

struct Mlp2Cache {
  Matrix pre;
  Matrix hidden;
  Matrix out;
};

Mlp2Cache mlp2_forward(const Mlp2& mlp, const Matrix& x) {
  Mlp2Cache c;
  c.pre = linear(x, mlp.l1);
  c.hidden = relu(c.pre);
  c.out = linear(c.hidden, mlp.l2);
  return c;
}

LinearLayer init_linear(int in, int out, Rng& rng) {
  LinearLayer layer{Matrix(in, out), Matrix(1, out)};
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  rng.fill_uniform(layer.weights, -limit, limit);
  return layer;
}

}  // namespace

ForwardCache forward(const NetworkParams& params, const Matrix& x, double noise_std, Rng& rng) {
  if (noise_std < 0.0) throw Error("forward: noise std must be non-negative");
  if (static_cast<int>(x.cols()) != params.input_dim()) {
    throw Error("forward: input dim " + std::to_string(x.cols()) + " != network input " +
                std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.input = x;
  if (noise_std > 0.0) {
    for (double& v : cache.input.flat()) v += rng.normal(0.0, noise_std);
  }
  const Matrix* h = &cache.input;
  for (const auto& layer : params.backbone) {
    cache.pre_acts.push_back(linear(*h, layer));
    cache.acts.push_back(relu(cache.pre_acts.back()));
    h = &cache.acts.back();
  }
  cache.logits = linear(*h, params.classifier);
  ensure_finite(cache.logits, "forward activations");
  return cache;
}

ForwardCache forward(const NetworkParams& params, const Matrix& x) {
  Rng unused(0);
  return forward(params, x, 0.0, unused);
}

NetGrads backward(const NetworkParams& params, const ForwardCache& cache,
                  const Matrix& d_features, const Matrix& d_logits) {
  if (cache.acts.size() != params.backbone.size()) {
    throw Error("backward: cache does not match network");
  }
  ensure_same_shape(d_logits, cache.logits, "backward d_logits");
  ensure_same_shape(d_features, cache.acts.back(), "backward d_features");

  NetGrads grads;
  grads.classifier = linear_backward(cache.acts.back(), d_logits);
  Matrix dh = matmul_nt(d_logits, params.classifier.weights) + d_features;

  grads.backbone.resize(params.backbone.size());
  for (std::size_t li = params.backbone.size(); li-- > 0;) {
    const Matrix dz = relu_backward(dh, cache.pre_acts[li]);
    const Matrix& input = li == 0 ? cache.input : cache.acts[li - 1];
    grads.backbone[li] = linear_backward(input, dz);
    dh = matmul_nt(dz, params.backbone[li].weights);
  }
  grads.d_input = std::move(dh);
  return grads;
}

HeadsForward heads_forward(const HeadParams& heads, const Mlp2& teacher_projector,
                           const Matrix& a_student, const Matrix& a_teacher) {
  HeadsForward out;
  out.cache.input = a_student;
  Mlp2Cache proj = mlp2_forward(heads.projector, a_student);
  Mlp2Cache pred = mlp2_forward(heads.predictor, proj.out);
  out.cache.proj_pre = std::move(proj.pre);
  out.cache.proj_hidden = std::move(proj.hidden);
  out.cache.proj_out = std::move(proj.out);
  out.cache.pred_pre = std::move(pred.pre);
  out.cache.pred_hidden = std::move(pred.hidden);
  out.cache.pred_out = pred.out;
  out.q = std::move(pred.out);
  normalize_rows(out.q, &out.cache.pred_norms);
  out.cache.q = out.q;

  out.k = project_keys(teacher_projector, a_teacher);
  return out;
}

Matrix project_keys(const Mlp2& projector, const Matrix& features) {
  Matrix keys = mlp2_forward(projector, features).out;
  normalize_rows(keys, nullptr);
  ensure_finite(keys, "project_keys");
  return keys;
}

HeadGrads heads_backward(const HeadParams& heads, const HeadsCache& cache, const Matrix& d_q) {
  ensure_same_shape(d_q, cache.q, "heads_backward d_q");
  // Through the row normalization: du = (g - (g . qhat) qhat) / |u|.
  Matrix du(d_q.rows(), d_q.cols());
  for (std::size_t i = 0; i < d_q.rows(); ++i) {
    const auto g = d_q.row(i);
    const auto qh = cache.q.row(i);
    const double gq = dot(g, qh);
    auto o = du.row(i);
    for (std::size_t j = 0; j < o.size(); ++j) {
      o[j] = (g[j] - gq * qh[j]) / cache.pred_norms[i];
    }
  }

  HeadGrads grads;
  grads.pred_l2 = linear_backward(cache.pred_hidden, du);
  Matrix dh = matmul_nt(du, heads.predictor.l2.weights);
  Matrix dz = relu_backward(dh, cache.pred_pre);
  grads.pred_l1 = linear_backward(cache.proj_out, dz);
  Matrix dp = matmul_nt(dz, heads.predictor.l1.weights);

  grads.proj_l2 = linear_backward(cache.proj_hidden, dp);
  dh = matmul_nt(dp, heads.projector.l2.weights);
  dz = relu_backward(dh, cache.proj_pre);
  grads.proj_l1 = linear_backward(cache.input, dz);
  grads.d_features = matmul_nt(dz, heads.projector.l1.weights);
  return grads;
}

void ema_update(TeacherState& teacher, const StudentParams& student) {
  const double eps = teacher.epsilon;
  auto blend = [eps](Matrix& t, const Matrix& s) {
    ensure_same_shape(t, s, "ema_update");
    auto tt = t.flat();
    auto ss = s.flat();
    for (std::size_t i = 0; i < tt.size(); ++i) tt[i] = eps * tt[i] + (1.0 - eps) * ss[i];
  };
  if (teacher.net.backbone.size() != student.net.backbone.size()) {
    throw Error("ema_update: backbone depth mismatch");
  }
  for (std::size_t i = 0; i < teacher.net.backbone.size(); ++i) {
    blend(teacher.net.backbone[i].weights, student.net.backbone[i].weights);
    blend(teacher.net.backbone[i].biases, student.net.backbone[i].biases);
  }
  blend(teacher.net.classifier.weights, student.net.classifier.weights);
  blend(teacher.net.classifier.biases, student.net.classifier.biases);
  if (teacher.projector) {
    blend(teacher.projector->l1.weights, student.heads.projector.l1.weights);
    blend(teacher.projector->l1.biases, student.heads.projector.l1.biases);
    blend(teacher.projector->l2.weights, student.heads.projector.l2.weights);
    blend(teacher.projector->l2.biases, student.heads.projector.l2.biases);
  }
}

StudentParams init_params(int input_dim, const std::vector<int>& hidden_dims, int feature_dim,
                          int class_count, Rng& rng, int projection_dim) {
  if (input_dim <= 0 || feature_dim <= 0 || class_count <= 0) {
    throw Error("init_params: dimensions must be positive");
  }
  for (int h : hidden_dims) {
    if (h <= 0) throw Error("init_params: hidden dims must be positive");
  }
  if (projection_dim < 0) throw Error("init_params: projection dim must be non-negative");
  const int d_p = projection_dim > 0 ? projection_dim : std::max(8, feature_dim / 2);

  StudentParams params;
  params.net.feature_dim = feature_dim;
  params.net.class_count = class_count;
  int in = input_dim;
  for (int h : hidden_dims) {
    params.net.backbone.push_back(init_linear(in, h, rng));
    in = h;
  }
  params.net.backbone.push_back(init_linear(in, feature_dim, rng));
  params.net.classifier = init_linear(feature_dim, class_count, rng);

  params.heads.projection_dim = d_p;
  params.heads.projector.l1 = init_linear(feature_dim, feature_dim, rng);
  params.heads.projector.l2 = init_linear(feature_dim, d_p, rng);
  params.heads.predictor.l1 = init_linear(d_p, feature_dim, rng);
  params.heads.predictor.l2 = init_linear(feature_dim, d_p, rng);
  return params;
}

TeacherState make_teacher(const StudentParams& student, double epsilon, TeacherRole role) {
  if (epsilon < 0.0 || epsilon > 1.0) throw Error("make_teacher: epsilon outside [0, 1]");
  TeacherState teacher;
  teacher.net = student.net;
  teacher.epsilon = epsilon;
  teacher.role = role;
  if (role == TeacherRole::sample_scatter) teacher.projector = student.heads.projector;
  return teacher;
}

std::vector<Matrix*> param_refs(StudentParams& params) {
  std::vector<Matrix*> refs;
  for (auto& layer : params.net.backbone) {
    refs.push_back(&layer.weights);
    refs.push_back(&layer.biases);
  }
  refs.push_back(&params.net.classifier.weights);
  refs.push_back(&params.net.classifier.biases);
  for (Mlp2* mlp : {&params.heads.projector, &params.heads.predictor}) {
    refs.push_back(&mlp->l1.weights);
    refs.push_back(&mlp->l1.biases);
    refs.push_back(&mlp->l2.weights);
    refs.push_back(&mlp->l2.biases);
  }
  return refs;
}

std::vector<const Matrix*> param_refs(const StudentParams& params) {
  auto refs = param_refs(const_cast<StudentParams&>(params));
  return {refs.begin(), refs.end()};
}

std::vector<Matrix*> grad_refs(StudentGrads& grads) {
  std::vector<Matrix*> refs;
  for (auto& layer : grads.net.backbone) {
    refs.push_back(&layer.d_weights);
    refs.push_back(&layer.d_biases);
  }
  refs.push_back(&grads.net.classifier.d_weights);
  refs.push_back(&grads.net.classifier.d_biases);
  for (LayerGrads* lg : {&grads.heads.proj_l1, &grads.heads.proj_l2, &grads.heads.pred_l1,
                         &grads.heads.pred_l2}) {
    refs.push_back(&lg->d_weights);
    refs.push_back(&lg->d_biases);
  }
  return refs;
}

std::vector<std::string> param_names(const StudentParams& params) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < params.net.backbone.size(); ++i) {
    names.push_back("backbone." + std::to_string(i) + ".W");
    names.push_back("backbone." + std::to_string(i) + ".b");
  }
  names.emplace_back("classifier.W");
  names.emplace_back("classifier.b");
  for (const char* head : {"projector", "predictor"}) {
    for (const char* layer : {"l1", "l2"}) {
      names.push_back(std::string(head) + "." + layer + ".W");
      names.push_back(std::string(head) + "." + layer + ".b");
    }
  }
  return names;
}

StudentGrads zero_grads(const StudentParams& params) {
  StudentGrads grads;
  auto zero_like = [](const Matrix& m) { return Matrix(m.rows(), m.cols()); };
  for (const auto& layer : params.net.backbone) {
    grads.net.backbone.push_back({zero_like(layer.weights), zero_like(layer.biases)});
  }
  grads.net.classifier = {zero_like(params.net.classifier.weights),
                          zero_like(params.net.classifier.biases)};
  grads.heads.proj_l1 = {zero_like(params.heads.projector.l1.weights),
                         zero_like(params.heads.projector.l1.biases)};
  grads.heads.proj_l2 = {zero_like(params.heads.projector.l2.weights),
                         zero_like(params.heads.projector.l2.biases)};
  grads.heads.pred_l1 = {zero_like(params.heads.predictor.l1.weights),
                         zero_like(params.heads.predictor.l1.biases)};
  grads.heads.pred_l2 = {zero_like(params.heads.predictor.l2.weights),
                         zero_like(params.heads.predictor.l2.biases)};
  return grads;
}

namespace {

void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r[j]);
      out << buf << (j + 1 == r.size() ? "" : " ");
    }
    out << "\n";
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const StudentParams& params,
                     std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("save_checkpoint: cannot open " + path);
  out << "dtsc-checkpoint v1\n";
  char hex[24];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  out << "config_hash " << hex << "\n";
  out << "feature_dim " << params.net.feature_dim << "\n";
  out << "class_count " << params.net.class_count << "\n";
  out << "projection_dim " << params.heads.projection_dim << "\n";
  out << "backbone_layers " << params.net.backbone.size() << "\n";

  const auto names = param_names(params);
  const auto refs = param_refs(params);
  for (std::size_t i = 0; i < refs.size(); ++i) write_matrix(out, names[i], *refs[i]);
  if (!out) throw Error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "dtsc-checkpoint v1") {
    throw Error("load_checkpoint: bad header in " + path);
  }
  Checkpoint ckpt;
  int feature_dim = 0, class_count = 0, projection_dim = 0;
  std::size_t backbone_layers = 0;
  {
    std::string key, hex;
    in >> key >> hex;
    if (key != "config_hash") throw Error("load_checkpoint: missing config_hash");
    ckpt.config_hash = std::stoull(hex, nullptr, 16);
    in >> key >> feature_dim;
    in >> key >> class_count;
    in >> key >> projection_dim;
    in >> key >> backbone_layers;
  }

  std::map<std::string, Matrix> mats;
  std::string tok;
  while (in >> tok) {
    if (tok != "matrix") throw Error("load_checkpoint: expected matrix record");
    std::string name;
    std::size_t rows = 0, cols = 0;
    in >> name >> rows >> cols;
    Matrix m(rows, cols);
    for (double& v : m.flat()) {
      if (!(in >> v)) throw Error("load_checkpoint: truncated matrix " + name);
    }
    mats.emplace(name, std::move(m));
  }

  auto take = [&](const std::string& name) {
    auto it = mats.find(name);
    if (it == mats.end()) throw Error("load_checkpoint: missing matrix " + name);
    Matrix m = std::move(it->second);
    mats.erase(it);
    return m;
  };

  StudentParams& p = ckpt.params;
  p.net.feature_dim = feature_dim;
  p.net.class_count = class_count;
  p.heads.projection_dim = projection_dim;
  for (std::size_t i = 0; i < backbone_layers; ++i) {
    const std::string base = "backbone." + std::to_string(i);
    p.net.backbone.push_back({take(base + ".W"), take(base + ".b")});
  }
  p.net.classifier = {take("classifier.W"), take("classifier.b")};
  p.heads.projector.l1 = {take("projector.l1.W"), take("projector.l1.b")};
  p.heads.projector.l2 = {take("projector.l2.W"), take("projector.l2.b")};
  p.heads.predictor.l1 = {take("predictor.l1.W"), take("predictor.l1.b")};
  p.heads.predictor.l2 = {take("predictor.l2.W"), take("predictor.l2.b")};
  if (!mats.empty()) throw Error("load_checkpoint: unexpected extra matrices");
  return ckpt;
}

}  // namespace dtsc
