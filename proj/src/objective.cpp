#include "sbwc/objective.hpp"

#include <algorithm>
#include <cmath>

namespace sbwc {
namespace {

constexpr Eigen::Index kNeuronChunk = 2048;
// Cache sigma' for the gradient pass when n*m stays below this many doubles.
constexpr std::size_t kCacheLimit = std::size_t{1} << 27;

}  // namespace

Objective::Objective(std::shared_ptr<const Dataset> data, LossSpec loss,
                     ActivationSpec activation, NetworkShape shape,
                     std::optional<int> excluded_index)
    : data_(std::move(data)),
      loss_(std::move(loss)),
      act_(activation),
      shape_(shape),
      excluded_(excluded_index) {
  if (!data_ || data_->n() == 0) throw DomainError("objective: empty dataset");
  if (data_->d() != shape_.d)
    throw DimensionError("objective: dataset dimension " +
                         std::to_string(data_->d()) + " != shape.d " +
                         std::to_string(shape_.d));
  if (static_cast<int>(data_->y.size()) != data_->n())
    throw DimensionError("objective: label count mismatch");
  if (excluded_ && (*excluded_ < 0 || *excluded_ >= data_->n()))
    throw DomainError("objective: excluded index out of range");
}

Objective Objective::without(int i) const {
  return Objective(data_, loss_, act_, shape_, i);
}

double Objective::kappa() const {
  return act_.big_l * radius() * radius() / std::sqrt(static_cast<double>(shape_.m));
}

double Objective::smoothness() const {
  if (!loss_.g_f || !loss_.l_f)
    throw DomainError("smoothness constant needs a Lipschitz and smooth loss; '" +
                      loss_.name() + "' is not");
  const double base = act_.ell * act_.ell * radius() * radius() + kappa();
  return base * std::max({1.0, *loss_.g_f, *loss_.l_f});
}

void Objective::check(std::span<const double> w) const {
  if (w.size() != shape_.num_params())
    throw DimensionError("objective: weight vector has length " +
                         std::to_string(w.size()) + ", expected " +
                         std::to_string(shape_.num_params()));
}

Eigen::VectorXd Objective::outputs(std::span<const double> w) const {
  check(w);
  return forward_batch(act_, Weights(shape_, Vec(w.begin(), w.end())), data_->X);
}

Vec Objective::sample_losses(std::span<const double> w) const {
  const Eigen::VectorXd phi = outputs(w);
  Vec out(n());
  for (int i = 0; i < n(); ++i)
    out[i] = loss_eval_unchecked(loss_, data_->y[i] * phi[i]).f;
  return out;
}

double Objective::risk(std::span<const double> w) const {
  const Vec losses = sample_losses(w);
  double s = 0.0;
  for (int i = 0; i < n(); ++i) s += weight(i) * losses[i];
  return s / n();
}

ValueGrad Objective::value_and_grad(std::span<const double> w) const {
  check(w);
  const int m = shape_.m, d = shape_.d, nn = n();
  const Eigen::Map<const RowMatrix> W(w.data(), m, d);
  const RowMatrix& X = data_->X;
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  const bool cache = static_cast<std::size_t>(nn) * m <= kCacheLimit;

  RowMatrix S1;  // a_j sigma'(z_ij), n x m
  if (cache) S1.resize(nn, m);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(nn);
  RowMatrix Z;
  for (Eigen::Index j0 = 0; j0 < m; j0 += kNeuronChunk) {
    const Eigen::Index cols = std::min<Eigen::Index>(kNeuronChunk, m - j0);
    Z.noalias() = X * W.middleRows(j0, cols).transpose();
    for (Eigen::Index i = 0; i < nn; ++i) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double a = j0 + c < m / 2 ? 1.0 : -1.0;
        const auto v = act_eval_unchecked(act_.kind, Z(i, c));
        s += a * v.sigma;
        if (cache) S1(i, j0 + c) = a * v.d1;
      }
      phi[i] += s;
    }
  }
  phi *= inv_sqrt_m;

  ValueGrad out;
  Eigen::VectorXd coef(nn);
  double risk_sum = 0.0;
  for (int i = 0; i < nn; ++i) {
    const double wi = weight(i);
    const auto lv = loss_eval_unchecked(loss_, data_->y[i] * phi[i]);
    risk_sum += wi * lv.f;
    coef[i] = wi * lv.d1 * data_->y[i] * inv_sqrt_m / nn;
  }
  out.risk = risk_sum / nn;

  out.grad.assign(shape_.num_params(), 0.0);
  Eigen::Map<RowMatrix> G(out.grad.data(), m, d);
  RowMatrix D;
  for (Eigen::Index j0 = 0; j0 < m; j0 += kNeuronChunk) {
    const Eigen::Index cols = std::min<Eigen::Index>(kNeuronChunk, m - j0);
    if (cache) {
      D = S1.middleCols(j0, cols);
    } else {
      D.noalias() = X * W.middleRows(j0, cols).transpose();
      for (Eigen::Index i = 0; i < nn; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) {
          const double a = j0 + c < m / 2 ? 1.0 : -1.0;
          D(i, c) = a * act_eval_unchecked(act_.kind, D(i, c)).d1;
        }
    }
    D.array().colwise() *= coef.array();
    G.middleRows(j0, cols).noalias() = D.transpose() * X;
  }
  return out;
}

Vec Objective::risk_grad(std::span<const double> w) const {
  return value_and_grad(w).grad;
}

Vec Objective::sample_grad(std::span<const double> w, int i) const {
  check(w);
  if (i < 0 || i >= n()) throw DomainError("sample_grad: index out of range");
  const Weights weights(shape_, Vec(w.begin(), w.end()));
  const auto xi = data_->x(i);
  const double u = data_->y[i] * forward(act_, weights, xi);
  Vec g = model_grad(act_, weights, xi);
  scale(loss_eval_unchecked(loss_, u).d1 * data_->y[i], g);
  return g;
}

HessianOperator Objective::hessian(std::span<const double> w) const {
  check(w);
  const int m = shape_.m, d = shape_.d, nn = n();
  HessianOperator H;
  H.data_ = data_;
  H.m_ = m;
  H.dim_ = shape_.num_params();
  H.W_ = Eigen::Map<const RowMatrix>(w.data(), m, d);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  const RowMatrix Z = data_->X * H.W_.transpose();
  H.s1_.resize(nn, m);
  H.s2_.resize(nn, m);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(nn);
  for (int i = 0; i < nn; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
      const double a = (j < m / 2 ? 1.0 : -1.0) * inv_sqrt_m;
      const auto v = act_eval_unchecked(act_.kind, Z(i, j));
      s += a * v.sigma;
      H.s1_(i, j) = a * v.d1;
      H.s2_(i, j) = a * v.d2;
    }
    phi[i] = s;
  }
  H.gn_.resize(nn);
  H.cv_.resize(nn);
  for (int i = 0; i < nn; ++i) {
    const auto lv = loss_eval_unchecked(loss_, data_->y[i] * phi[i]);
    H.gn_[i] = weight(i) * lv.d2 / nn;
    H.cv_[i] = weight(i) * lv.d1 * data_->y[i] / nn;
  }
  return H;
}

void HessianOperator::apply(std::span<const double> v, std::span<double> out) const {
  if (v.size() != dim_ || out.size() != dim_)
    throw DimensionError("hessian apply: wrong vector length");
  const int d = static_cast<int>(W_.cols());
  const Eigen::Map<const RowMatrix> V(v.data(), m_, d);
  const RowMatrix& X = data_->X;
  // P_ij = <x_i, v_j>
  const RowMatrix P = X * V.transpose();
  // g_i = <grad Phi_i, v>
  const Eigen::VectorXd g = (s1_.array() * P.array()).rowwise().sum();
  RowMatrix D = s1_;
  D.array().colwise() *= (gn_.array() * g.array());
  D.array() += (s2_.array() * P.array()).colwise() * cv_.array();
  Eigen::Map<RowMatrix> Out(out.data(), m_, d);
  Out.noalias() = D.transpose() * X;
}

Vec HessianOperator::apply(std::span<const double> v) const {
  Vec out(dim_);
  apply(v, out);
  return out;
}

SymmetricOperator HessianOperator::as_operator() const {
  return [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
}

Vec Objective::risk_hvp(std::span<const double> w, std::span<const double> v) const {
  if (v.size() != shape_.num_params())
    throw DimensionError("risk_hvp: direction has wrong length");
  return hessian(w).apply(v);
}

ObjectiveStats Objective::stats(std::span<const double> w) const {
  const ValueGrad vg = value_and_grad(w);
  const Eigen::VectorXd phi = outputs(w);
  ObjectiveStats st;
  st.risk = vg.risk;
  for (int i = 0; i < n(); ++i) {
    const auto lv = loss_eval_unchecked(loss_, data_->y[i] * phi[i]);
    st.fprime += weight(i) * std::abs(lv.d1);
    st.fdoubleprime += weight(i) * std::abs(lv.d2);
  }
  st.fprime /= n();
  st.fdoubleprime /= n();
  st.grad_norm = norm(vg.grad);
  st.smoothness = (loss_.g_f && loss_.l_f) ? smoothness() : 0.0;
  return st;
}

EigenEstimate Objective::min_eig(std::span<const double> w, double tol,
                                 std::size_t dense_limit) const {
  const HessianOperator H = hessian(w);
  if (H.dim() <= dense_limit) {
    const Eigen::MatrixXd A = dense_matrix(H.as_operator(), H.dim());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    EigenEstimate e;
    e.lambda = es.eigenvalues()[0];
    e.norm_estimate = es.eigenvalues().cwiseAbs().maxCoeff();
    e.vector.assign(es.eigenvectors().col(0).data(),
                    es.eigenvectors().col(0).data() + H.dim());
    const Vec hv = H.apply(e.vector);
    double r2 = 0.0;
    for (std::size_t t = 0; t < H.dim(); ++t) {
      const double r = hv[t] - e.lambda * e.vector[t];
      r2 += r * r;
    }
    e.residual = std::sqrt(r2);
    e.tol = tol > 0.0 ? tol : 1e-8 * std::max(1.0, e.norm_estimate);
    e.matvecs = static_cast<int>(H.dim()) + 1;
    return e;
  }
  LanczosOptions opt;
  opt.tol = tol;
  return lanczos_min_eig(H.as_operator(), H.dim(), opt);
}

double Objective::hessian_norm(std::span<const double> w,
                               std::size_t dense_limit) const {
  const HessianOperator H = hessian(w);
  if (H.dim() <= dense_limit) {
    const Eigen::MatrixXd A = dense_matrix(H.as_operator(), H.dim());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()),
                                                     Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return lanczos_norm(H.as_operator(), H.dim());
}

}  // namespace sbwc
