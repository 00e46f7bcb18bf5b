#pragma once

// Exact sampling of stationary Gaussian paths X_n ~ N(0, T_n(f)) and a
// deterministic Monte Carlo harness with one independent stream per replication.

#include "lanarray/errors.hpp"
#include "lanarray/spectral_models.hpp"
#include "lanarray/toeplitz.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <array>
#include <atomic>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace lanarray {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The key is
/// the 64-bit stream seed; each call to operator() consumes one 32-bit word.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    explicit Philox4x32(std::uint64_t seed = 0) : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    result_type operator()() {
        if (pos_ == 4) {
            block_ = generate(counter_);
            for (auto& c : counter_)
                if (++c != 0) break;
            pos_ = 0;
        }
        return block_[pos_++];
    }

    /// The raw bijection for a given counter; exposed for known-answer tests.
    std::array<std::uint32_t, 4> generate(std::array<std::uint32_t, 4> ctr) const {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += W0;
            k[1] += W1;
        }
        return ctr;
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_{0, 0, 0, 0};
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;
};

inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t r) { return base ^ r; }

inline Eigen::VectorXd standard_normals(Philox4x32& rng, Eigen::Index n) {
    std::normal_distribution<double> z;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = z(rng);
    return v;
}

enum class SamplerKind { cholesky, circulant };

inline const char* to_string(SamplerKind s) { return s == SamplerKind::cholesky ? "cholesky" : "circulant"; }

/// Sampler for one (model, theta, n), reusable across seeds.
class GaussianSampler {
public:
    GaussianSampler(const ModelPtr& model, const ParameterVector& theta, int n, SamplerKind kind)
        : n_(n), requested_(kind) {
        model->require(theta, n);
        const double alpha = model->alpha_hint(theta, n);
        const ModelStage st = model->stage(n);
        auto fn = [model, theta, st](double l) {
            double v = 0.0;
            model->evaluate(theta, st, l, 0, &v);
            return v;
        };
        if (kind == SamplerKind::circulant && try_circulant(Symbol{fn, alpha, "f"})) return;
        if (kind == SamplerKind::circulant) fallback_ = true;
        const AutocovarianceSequence col = fourier_coefficients(Symbol{fn, alpha, "f"}, n);
        DenseCholeskyFactor fac(col.gamma);  // throws with the smallest pivot on failure
        L_ = fac.llt().matrixL();
    }

    int n() const { return n_; }
    SamplerKind requested() const { return requested_; }
    /// True when circulant embedding was requested but not nonnegative definite.
    bool fallback_used() const { return fallback_; }
    int embedding_size() const { return m_; }

    Eigen::VectorXd sample(std::uint64_t seed) const {
        Philox4x32 rng(seed);
        if (m_ == 0) return L_ * standard_normals(rng, n_);
        const Eigen::VectorXd z1 = standard_normals(rng, m_);
        const Eigen::VectorXd z2 = standard_normals(rng, m_);
        std::vector<std::complex<double>> w(static_cast<std::size_t>(m_)), y;
        for (int k = 0; k < m_; ++k) w[k] = sqrt_eig_[k] * std::complex<double>(z1[k], z2[k]);
        Eigen::FFT<double> fft;
        fft.fwd(y, w);  // real part has the circulant covariance
        Eigen::VectorXd out(n_);
        for (int i = 0; i < n_; ++i) out[i] = y[i].real();
        return out;
    }

private:
    bool try_circulant(const Symbol& f) {
        int m = 1;
        while (m < 2 * n_) m <<= 1;
        const long limit = 64L * n_;
        for (; m <= std::max<long>(limit, 2L * n_); m <<= 1) {
            const int half = m / 2;
            const Eigen::VectorXd g = fourier_coefficients(f, half + 1).gamma;
            std::vector<double> row(static_cast<std::size_t>(m));
            for (int j = 0; j <= half; ++j) row[j] = g[j];
            for (int j = half + 1; j < m; ++j) row[j] = g[m - j];
            std::vector<std::complex<double>> eig;
            Eigen::FFT<double> fft;
            fft.fwd(eig, row);
            double top = 0.0, bottom = 0.0;
            for (const auto& e : eig) {
                top = std::max(top, e.real());
                bottom = std::min(bottom, e.real());
            }
            if (bottom < -1e-8 * top) continue;
            m_ = m;
            sqrt_eig_.resize(m);
            for (int k = 0; k < m; ++k) sqrt_eig_[k] = std::sqrt(std::max(eig[k].real(), 0.0) / m);
            return true;
        }
        return false;
    }

    int n_;
    SamplerKind requested_;
    bool fallback_ = false;
    int m_ = 0;
    Eigen::VectorXd sqrt_eig_;
    Eigen::MatrixXd L_;
};

inline Eigen::VectorXd sample_path(const ModelPtr& model, const ParameterVector& theta0, int n, std::uint64_t seed,
                                   SamplerKind sampler = SamplerKind::circulant) {
    return GaussianSampler(model, theta0, n, sampler).sample(seed);
}

struct SimulationPlan {
    ModelPtr model;
    ParameterVector theta0;
    std::vector<int> n_list;
    int replications = 1;
    std::uint64_t seed = 0;
    SamplerKind sampler = SamplerKind::circulant;
    int workers = 1;

    void validate() const {
        if (!model) throw ContractError("simulation plan: no model");
        if (replications < 1) throw ContractError("simulation plan: replications must be >= 1");
        if (n_list.empty()) throw ContractError("simulation plan: empty n list");
        if (workers < 1) throw ContractError("simulation plan: workers must be >= 1");
        for (int n : n_list) model->require(theta0, n);
    }
};

struct PathContext {
    int n = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    const GaussianSampler* sampler = nullptr;
};

template <class Record>
struct McRecord {
    int n = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    Record value{};
};

/// Runs per_path on every (n, replication) with `workers` threads. Records come
/// back ordered by (n index, replication) regardless of scheduling; failures
/// are captured per record.
template <class Record>
std::vector<McRecord<Record>> run_monte_carlo(const SimulationPlan& plan,
                                              const std::function<Record(const Eigen::VectorXd&, const PathContext&)>& per_path) {
    plan.validate();
    std::vector<std::shared_ptr<const GaussianSampler>> samplers;
    for (int n : plan.n_list) samplers.push_back(std::make_shared<GaussianSampler>(plan.model, plan.theta0, n, plan.sampler));

    const std::size_t R = static_cast<std::size_t>(plan.replications);
    const std::size_t total = plan.n_list.size() * R;
    std::vector<McRecord<Record>> out(total);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= total) return;
            const std::size_t ni = idx / R;
            McRecord<Record>& rec = out[idx];
            rec.n = plan.n_list[ni];
            rec.replication = static_cast<int>(idx % R);
            rec.seed = replication_seed(plan.seed, static_cast<std::uint64_t>(rec.replication));
            try {
                const PathContext ctx{rec.n, rec.replication, rec.seed, samplers[ni].get()};
                rec.value = per_path(samplers[ni]->sample(rec.seed), ctx);
            } catch (const std::exception& e) {
                rec.failed = true;
                rec.error = e.what();
            }
        }
    };
    const int width = std::max(1, std::min<int>(plan.workers, static_cast<int>(total)));
    std::vector<std::thread> pool;
    for (int w = 1; w < width; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

} // namespace lanarray
