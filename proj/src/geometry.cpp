#include "postsel/geometry.hpp"

#include "postsel/errors.hpp"

namespace postsel {

SelectionPolytope build_polytope(const Eigen::MatrixXd& X_fbar,
                                 const Eigen::MatrixXd& G_ebar,
                                 const std::vector<int>& active,
                                 const Eigen::VectorXd& signs,
                                 const Eigen::VectorXd& lambda,
                                 double epsilon) {
  const int q = static_cast<int>(X_fbar.cols());
  const int ne = static_cast<int>(active.size());
  const int ni = q - ne;
  const int nb = static_cast<int>(G_ebar.cols());
  if (signs.size() != ne) throw ValidationError("signs length != |active|");
  if (lambda.size() != q) throw ValidationError("lambda length != |fbar|");
  if (ne == 0) throw ValidationError("polytope undefined for empty selection");

  SelectionPolytope poly;
  poly.order = active;
  {
    int k = 0;
    for (int j = 0; j < q; ++j) {
      if (k < ne && active[k] == j) ++k;
      else poly.order.push_back(j);
    }
  }
  const std::vector<int> inact(poly.order.begin() + ne, poly.order.end());

  const Eigen::MatrixXd Xe = X_fbar(Eigen::all, active);
  Eigen::MatrixXd M = Xe.transpose() * Xe;
  M.diagonal().array() += epsilon;
  Eigen::LLT<Eigen::MatrixXd> Mllt(M);
  if (Mllt.info() != Eigen::Success)
    throw NumericalError("active gram block not positive definite");

  Eigen::VectorXd lam_e(ne), lam_i(ni);
  for (int k = 0; k < ne; ++k) lam_e[k] = lambda[active[k]];
  for (int m = 0; m < ni; ++m) lam_i[m] = lambda[inact[m]];

  // diag(s) M^-1 acting on the active block.
  Eigen::MatrixXd SMinv = Mllt.solve(Eigen::MatrixXd::Identity(ne, ne));
  for (int k = 0; k < ne; ++k) SMinv.row(k) *= signs[k];

  const Eigen::MatrixXd Xi = X_fbar(Eigen::all, inact);
  const Eigen::MatrixXd A =
      Mllt.solve(Xe.transpose() * Xi).transpose();    // ni x ne
  const Eigen::MatrixXd XeTGe = Xe.transpose() * G_ebar;
  const Eigen::MatrixXd XiTGe = Xi.transpose() * G_ebar;

  const int rows = ne + 2 * ni;
  poly.U.setZero(rows, nb);
  poly.V.setZero(rows, q);
  poly.t.setZero(rows);

  const Eigen::VectorXd lam_s = lam_e.cwiseProduct(signs);

  poly.U.topRows(ne) = SMinv * XeTGe;
  poly.V.topLeftCorner(ne, ne) = SMinv;
  poly.t.head(ne) = SMinv * lam_s;

  // Lower side: lambda_j + (Lambda z)_j > 0.
  const Eigen::MatrixXd Bmat = XiTGe - A * XeTGe;     // ni x nb
  poly.U.middleRows(ne, ni) = Bmat;
  poly.V.block(ne, 0, ni, ne) = -A;
  poly.V.block(ne, ne, ni, ni).setIdentity();
  poly.t.segment(ne, ni) = -lam_i - A * lam_s;

  // Upper side: lambda_j - (Lambda z)_j > 0.
  poly.U.bottomRows(ni) = -Bmat;
  poly.V.block(ne + ni, 0, ni, ne) = A;
  poly.V.block(ne + ni, ne, ni, ni) =
      -Eigen::MatrixXd::Identity(ni, ni);
  poly.t.tail(ni) = -lam_i + A * lam_s;

  poly.W = poly.V;
  return poly;
}

bool event_contains(const SelectionPolytope& poly,
                    const Eigen::VectorXd& beta_hat,
                    const Eigen::VectorXd& r,
                    const Eigen::VectorXd& beta_perp) {
  const int q = static_cast<int>(poly.order.size());
  if (beta_hat.size() != poly.U.cols())
    throw ValidationError("event_contains: beta_hat length mismatch");
  if (r.size() != q || beta_perp.size() != q)
    throw ValidationError("event_contains: candidate-set length mismatch");
  Eigen::VectorXd r_ord(q), perp_ord(q);
  for (int i = 0; i < q; ++i) {
    r_ord[i] = r[poly.order[i]];
    perp_ord[i] = beta_perp[poly.order[i]];
  }
  const Eigen::VectorXd lhs =
      poly.U * beta_hat + poly.V * r_ord + poly.W * perp_ord - poly.t;
  return (lhs.array() > 0.0).all();
}

double estimate_sigma(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(y.size());
  const int k = static_cast<int>(X.cols());
  if (X.rows() != n) throw ValidationError("estimate_sigma: shape mismatch");
  if (n - k < 1)
    throw ValidationError("estimate_sigma: no residual degrees of freedom");
  Eigen::LLT<Eigen::MatrixXd> llt(X.transpose() * X);
  if (llt.info() != Eigen::Success)
    throw NumericalError("estimate_sigma: rank deficient design");
  const Eigen::VectorXd fit = X * llt.solve(X.transpose() * y);
  return (y - fit).squaredNorm() / (n - k);
}

PosteriorGeometry build_geometry(const SelectionRecord& rec,
                                 const Eigen::MatrixXd& G, double sigma_sq,
                                 double eta_sq) {
  if (rec.active.empty())
    throw ValidationError("geometry undefined for empty selection");
  if (sigma_sq <= 0 || eta_sq <= 0)
    throw ValidationError("variance parameters must be positive");

  const int q = static_cast<int>(rec.fbar.size());
  const int ne = static_cast<int>(rec.active.size());

  PosteriorGeometry geo;
  geo.sigma_sq = sigma_sq;
  geo.eta_sq = eta_sq;
  geo.signs = rec.signs;
  geo.beta_lasso = rec.beta_lasso;
  geo.beta_hat = rec.beta_hat;

  const Eigen::MatrixXd Xf = G(Eigen::all, rec.fbar);
  const Eigen::MatrixXd Ge = G(Eigen::all, rec.ebar);
  std::vector<int> order = rec.active;
  {
    int k = 0;
    for (int j = 0; j < q; ++j) {
      if (k < ne && rec.active[k] == j) ++k;
      else order.push_back(j);
    }
  }
  const Eigen::MatrixXd Xr = Xf(Eigen::all, order);
  const Eigen::MatrixXd Xe = Xf(Eigen::all, rec.active);

  geo.Q = Xr.transpose() * Xe;
  geo.Q.topRows(ne).diagonal().array() += rec.epsilon;
  geo.QtQ = geo.Q.transpose() * geo.Q;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(geo.QtQ);
  if (eig.info() != Eigen::Success)
    throw NumericalError("eigendecomposition of QtQ failed");
  if (eig.eigenvalues().minCoeff() <= 0)
    throw NumericalError("QtQ not positive definite");
  const Eigen::MatrixXd sqrtQtQ =
      eig.eigenvectors() *
      eig.eigenvalues().cwiseSqrt().asDiagonal() *
      eig.eigenvectors().transpose();
  geo.sqrt_diag = sqrtQtQ.diagonal();

  Eigen::LLT<Eigen::MatrixXd> qtq_llt(geo.QtQ);

  // Reordered lambda and the subgradient/sign vector (Lambda_E s; Lambda z).
  Eigen::VectorXd c(q);
  for (int k = 0; k < ne; ++k)
    c[k] = rec.lambda[rec.active[k]] * rec.signs[k];
  for (int m = ne; m < q; ++m)
    c[m] = rec.lambda[order[m]] * rec.subgradient[m - ne];

  Eigen::VectorXd perp_ord(q);
  for (int i = 0; i < q; ++i) perp_ord[i] = rec.beta_perp[order[i]];

  geo.P = qtq_llt.solve(geo.Q.transpose() * (Xr.transpose() * Ge));
  geo.o = qtq_llt.solve(geo.Q.transpose() * (perp_ord - c));

  Eigen::MatrixXd GeTGe = Ge.transpose() * Ge;
  Eigen::LLT<Eigen::MatrixXd> ge_llt(GeTGe);
  if (ge_llt.info() != Eigen::Success)
    throw NumericalError("inference gram matrix not positive definite");
  const int nb = static_cast<int>(rec.ebar.size());
  geo.Sigma = sigma_sq * ge_llt.solve(Eigen::MatrixXd::Identity(nb, nb));
  geo.Sigma_inv = GeTGe / sigma_sq;

  geo.QtQP = geo.QtQ * geo.P;
  geo.SPt = (geo.Sigma * geo.P.transpose() * geo.QtQ) / eta_sq;
  geo.Apsi = Eigen::MatrixXd::Identity(nb, nb) + geo.SPt * geo.P;
  return geo;
}

}  // namespace postsel
