#include "cfdiff/est/estimators.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "cfdiff/error.hpp"

namespace cfdiff::est {

namespace {
using MatrixC =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

CVec ls_estimate(const chan::PilotObservation& obs, const std::vector<int>& assignment,
                 const std::vector<double>& powers, int tau_p, int L, int M) {
    const int U = static_cast<int>(assignment.size());
    if (powers.size() != assignment.size())
        throw DimensionError("ls_estimate: powers/assignment size mismatch");
    if (obs.y.size() != static_cast<std::size_t>(L) * tau_p * M)
        throw DimensionError("ls_estimate: observation size " + std::to_string(obs.y.size()) +
                             " vs L*tau_p*M = " + std::to_string(L * tau_p * M));
    CVec h(static_cast<std::size_t>(L) * U * M);
    for (int u = 0; u < U; ++u) {
        const double denom_sq = tau_p * powers[u];
        if (!(denom_sq > 0.0))
            throw InputError("ls_estimate: zero pilot power for UE " + std::to_string(u));
        const double inv = 1.0 / std::sqrt(denom_sq);
        const int s = assignment[u];
        for (int l = 0; l < L; ++l) {
            const Complex* y = obs.y.data() + (static_cast<std::size_t>(l) * tau_p + s) * M;
            Complex* out = h.data() + (static_cast<std::size_t>(l) * U + u) * M;
            for (int m = 0; m < M; ++m) out[m] = inv * y[m];
        }
    }
    return h;
}

CVec mmse_estimate(const chan::PilotObservation& obs, const std::vector<int>& assignment,
                   const std::vector<double>& powers, const std::vector<double>& beta, int tau_p,
                   int L, int M, double noise_power_w) {
    const int U = static_cast<int>(assignment.size());
    if (beta.size() != static_cast<std::size_t>(L) * U)
        throw DimensionError("mmse_estimate: beta size mismatch");
    if (obs.y.size() != static_cast<std::size_t>(L) * tau_p * M)
        throw DimensionError("mmse_estimate: observation size mismatch");
    CVec h(static_cast<std::size_t>(L) * U * M);
    for (int u = 0; u < U; ++u) {
        const int s = assignment[u];
        for (int l = 0; l < L; ++l) {
            double interference = 0.0;  // tau_p sum over co-pilot UEs of p_i beta_li
            for (int i = 0; i < U; ++i)
                if (assignment[i] == s)
                    interference += tau_p * powers[i] * beta[static_cast<std::size_t>(l) * U + i];
            const double coeff = std::sqrt(tau_p * powers[u]) *
                                 beta[static_cast<std::size_t>(l) * U + u] /
                                 (interference + noise_power_w);
            const Complex* y = obs.y.data() + (static_cast<std::size_t>(l) * tau_p + s) * M;
            Complex* out = h.data() + (static_cast<std::size_t>(l) * U + u) * M;
            for (int m = 0; m < M; ++m) out[m] = coeff * y[m];
        }
    }
    return h;
}

double ls_error_variance(const std::vector<int>& assignment, const std::vector<double>& powers,
                         const std::vector<double>& beta, int tau_p, int L, int u,
                         double noise_power_w) {
    const int U = static_cast<int>(assignment.size());
    if (powers.size() != assignment.size())
        throw DimensionError("ls_error_variance: powers/assignment size mismatch");
    if (beta.size() != static_cast<std::size_t>(L) * U)
        throw DimensionError("ls_error_variance: beta size mismatch");
    if (u < 0 || u >= U) throw InputError("ls_error_variance: UE index out of range");
    if (!(tau_p * powers[u] > 0.0))
        throw InputError("ls_error_variance: zero pilot power for UE " + std::to_string(u));
    double var = noise_power_w / (tau_p * powers[u]);
    for (int i = 0; i < U; ++i) {
        if (i == u || assignment[i] != assignment[u]) continue;
        double mean_beta = 0.0;
        for (int l = 0; l < L; ++l) mean_beta += beta[static_cast<std::size_t>(l) * U + i];
        var += powers[i] / powers[u] * mean_beta / L;
    }
    return var;
}

CVec sensing_ls(const CVec& y, const CVec& x, int M, int N) {
    if (N < M)
        throw InputError("sensing_ls: need N >= M snapshots, got N = " + std::to_string(N) +
                         ", M = " + std::to_string(M));
    if (y.size() != static_cast<std::size_t>(M) * N || x.size() != y.size())
        throw DimensionError("sensing_ls: Y/X must both be [M, N]");
    Eigen::Map<const MatrixC> Y(y.data(), M, N);
    Eigen::Map<const MatrixC> X(x.data(), M, N);
    const MatrixC gram = X * X.adjoint();  // [M, M]

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e8)
        throw NumericError("sensing_ls: probe covariance ill-conditioned (cond ~ " +
                           std::to_string(lo > 0.0 ? hi / lo : std::pow(10.0, 300.0)) + ")");

    const MatrixC h = Y * X.adjoint() * gram.inverse();
    CVec out(static_cast<std::size_t>(M) * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) out[static_cast<std::size_t>(i) * M + j] = h(i, j);
    return out;
}

NmseResult nmse(const CVec& estimate, const CVec& truth, int link_len) {
    if (estimate.size() != truth.size() || link_len < 1 ||
        truth.size() % static_cast<std::size_t>(link_len) != 0)
        throw DimensionError("nmse: estimate/truth shape mismatch");
    const std::size_t links = truth.size() / link_len;
    NmseResult res;
    res.per_link.reserve(links);
    for (std::size_t k = 0; k < links; ++k) {
        double err = 0.0, pow_t = 0.0;
        for (int m = 0; m < link_len; ++m) {
            err += std::norm(estimate[k * link_len + m] - truth[k * link_len + m]);
            pow_t += std::norm(truth[k * link_len + m]);
        }
        if (pow_t == 0.0)
            throw NumericError("nmse: zero-norm truth vector in link " + std::to_string(k));
        res.per_link.push_back(err / pow_t);
        res.linear += err / pow_t;
    }
    res.linear /= static_cast<double>(links);
    res.db = to_db(res.linear);
    return res;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace cfdiff::est
