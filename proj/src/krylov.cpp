#include "evatrap/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <arpack/arpack.h>

#include "evatrap/errors.hpp"

namespace evatrap::detail {

KrylovResult largest_eigenpairs(const LinearOperator& op, Eigen::Index n, const KrylovOptions& options) {
  const auto nn = static_cast<a_int>(n);
  const a_int nev = std::min<a_int>(options.nev, nn - 2);
  const a_int ncv = std::min<a_int>(std::max<a_int>(options.krylov_dim, 2 * nev + 1), nn);

  Eigen::VectorXd resid(n);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (Eigen::Index k = 0; k < n; ++k) resid[k] = 1.0 + 0.5 * uni(rng);

  Eigen::MatrixXd v(n, ncv);
  std::vector<double> workd(3 * static_cast<std::size_t>(n));
  const a_int lworkl = 3 * ncv * ncv + 6 * ncv;
  std::vector<double> workl(static_cast<std::size_t>(lworkl));
  a_int iparam[11] = {};
  a_int ipntr[14] = {};
  iparam[0] = 1;  // exact shifts
  iparam[2] = options.max_restarts;
  iparam[6] = 1;  // regular mode: op is already shift-inverted
  a_int ido = 0;
  a_int info = 1;  // use the supplied start vector

  Eigen::VectorXd in(n), out(n);
  for (;;) {
    dnaupd_c(&ido, "I", nn, "LM", nev, options.tolerance, resid.data(), ncv, v.data(), nn, iparam, ipntr,
             workd.data(), workl.data(), lworkl, &info);
    if (ido != -1 && ido != 1) break;
    in = Eigen::Map<const Eigen::VectorXd>(workd.data() + ipntr[0] - 1, n);
    op(in, out);
    Eigen::Map<Eigen::VectorXd>(workd.data() + ipntr[1] - 1, n) = out;
  }
  KrylovResult result;
  result.restarts = iparam[2];
  if (info < 0) throw SolverError("ARPACK update failed with code " + std::to_string(info), 0.0);
  result.converged = info == 0;

  std::vector<a_int> select(static_cast<std::size_t>(ncv), 1);
  std::vector<double> dr(static_cast<std::size_t>(nev + 1)), di(static_cast<std::size_t>(nev + 1));
  Eigen::MatrixXd z(n, nev + 1);
  std::vector<double> workev(3 * static_cast<std::size_t>(ncv));
  a_int einfo = 0;
  dneupd_c(1, "A", select.data(), dr.data(), di.data(), z.data(), nn, 0.0, 0.0, workev.data(), "I", nn, "LM",
           nev, options.tolerance, resid.data(), ncv, v.data(), nn, iparam, ipntr, workd.data(), workl.data(),
           lworkl, &einfo);
  if (einfo != 0) throw SolverError("ARPACK eigenvector extraction failed with code " + std::to_string(einfo), 0.0);

  const int found = static_cast<int>(iparam[4]);
  std::vector<int> order;
  for (int k = 0; k < found; ++k)
    if (di[static_cast<std::size_t>(k)] == 0.0) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dr[a] > dr[b]; });

  result.values.resize(order.size());
  result.ritz_residuals.resize(order.size());
  result.vectors.resize(n, static_cast<Eigen::Index>(order.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    Eigen::VectorXd vec = z.col(order[k]);
    vec /= vec.norm();
    op(vec, out);
    result.values[k] = dr[static_cast<std::size_t>(order[k])];
    result.ritz_residuals[k] = (out - result.values[k] * vec).norm();
    result.vectors.col(static_cast<Eigen::Index>(k)) = vec;
  }
  return result;
}

}  // namespace evatrap::detail
