#pragma once

// Per-stream SINR laws under imperfect CSI, and exact SINR sampling.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "rsma_sqp/errors.hpp"
#include "rsma_sqp/quadrature.hpp"
#include "rsma_sqp/scenario.hpp"

namespace rsma_sqp {

using PowerVector = PerStream<double>;

inline PowerVector uniform_power(double p) {
    PowerVector v;
    v.v.fill(p);
    return v;
}

/// Gaussian SNR law truncated at zero and renormalized. `variance` is sigma_hat^2.
struct GaussianSnr {
    double mean = 0.0;
    double variance = 0.0;

    static constexpr double kSupportSigmas = 8.0;

    double sd() const { return std::sqrt(variance); }
    bool degenerate() const { return !(variance > 0.0) || sd() <= 1e-14 * std::abs(mean); }

    /// Mass of the untruncated Gaussian on [0, inf).
    double kept_mass() const {
        if (degenerate()) return 1.0;
        return 0.5 * std::erfc(-mean / (sd() * std::numbers::sqrt2));
    }

    double lo() const { return degenerate() ? std::max(0.0, mean) : std::max(0.0, mean - kSupportSigmas * sd()); }
    double hi() const { return degenerate() ? std::max(0.0, mean) : mean + kSupportSigmas * sd(); }

    double pdf(double x) const {
        if (degenerate()) throw DomainError("pdf of a point mass");
        if (x < 0) return 0.0;
        const double s = sd();
        const double z = (x - mean) / s;
        return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi) * kept_mass());
    }

    /// Upper tail P(X > x) of the truncated law.
    double survival(double x) const {
        if (degenerate()) return x < std::max(0.0, mean) ? 1.0 : 0.0;
        if (x <= 0) return 1.0;
        return 0.5 * std::erfc((x - mean) / (sd() * std::numbers::sqrt2)) / kept_mass();
    }

    template <class Rng>
    double sample(Rng& rng) const {
        if (degenerate()) return std::max(0.0, mean);
        std::normal_distribution<double> n(mean, sd());
        // Rejection is cheap at the operating points of interest (mean >> sd).
        for (;;) {
            const double x = n(rng);
            if (x >= 0) return x;
        }
    }
};

inline GaussianSnr sum_of(const GaussianSnr& a, const GaussianSnr& b) {
    return {a.mean + b.mean, a.variance + b.variance};
}

/// One SINR law: either the SNR itself or SNR / (1 + interference).
struct SinrComponent {
    enum class Form { Direct, RatioOverOne };
    Form form = Form::Direct;
    GaussianSnr num;
    GaussianSnr interf; // only for RatioOverOne
};

/// Equal-weight mixture of SINR components. A single component unless
/// h_hat is marginalized.
class SinrDistribution {
public:
    SinrDistribution() = default;
    explicit SinrDistribution(SinrComponent c) : parts_{c} {}
    explicit SinrDistribution(std::vector<SinrComponent> parts) : parts_(std::move(parts)) {}

    const std::vector<SinrComponent>& components() const { return parts_; }

    bool point_mass() const {
        return std::all_of(parts_.begin(), parts_.end(), [](const SinrComponent& c) {
            return c.num.degenerate() && (c.form == SinrComponent::Form::Direct || c.interf.degenerate());
        });
    }

    std::pair<double, double> support() const {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (const auto& c : parts_) {
            auto [a, b] = support_of(c);
            lo = std::min(lo, a);
            hi = std::max(hi, b);
        }
        return {lo, hi};
    }

    double pdf(double x, const quad::Options& opt = {}) const {
        if (x < 0) throw DomainError("pdf evaluated at negative SINR");
        double acc = 0.0;
        for (const auto& c : parts_) acc += pdf_of(c, x, opt);
        return acc / static_cast<double>(parts_.size());
    }

    /// E[g(Gamma_hat)] over the truncated support.
    template <class G>
    double expect(G&& g, const quad::Options& opt = {}) const {
        double acc = 0.0;
        for (const auto& c : parts_) acc += expect_of(c, g, opt);
        return acc / static_cast<double>(parts_.size());
    }

    template <class Rng>
    double sample(Rng& rng) const {
        std::size_t k = 0;
        if (parts_.size() > 1) k = std::uniform_int_distribution<std::size_t>(0, parts_.size() - 1)(rng);
        const auto& c = parts_[k];
        const double n = c.num.sample(rng);
        if (c.form == SinrComponent::Form::Direct) return n;
        return n / (1.0 + c.interf.sample(rng));
    }

    double mean(const quad::Options& opt = {}) const {
        return expect([](double x) { return x; }, opt);
    }

private:
    std::vector<SinrComponent> parts_;

    static std::pair<double, double> support_of(const SinrComponent& c) {
        if (c.form == SinrComponent::Form::Direct) return {c.num.lo(), c.num.hi()};
        return {c.num.lo() / (1.0 + c.interf.hi()), c.num.hi() / (1.0 + c.interf.lo())};
    }

    static double pdf_of(const SinrComponent& c, double x, const quad::Options& opt) {
        const auto& n = c.num;
        if (c.form == SinrComponent::Form::Direct) return n.pdf(x);
        const auto& in = c.interf;
        if (n.degenerate() && in.degenerate()) throw DomainError("pdf of a point mass");
        if (in.degenerate()) {
            const double k = 1.0 + std::max(0.0, in.mean);
            return k * n.pdf(k * x);
        }
        if (n.degenerate()) {
            // X = c / (1 + Y): change of variables y = c / x - 1.
            const double cst = std::max(0.0, n.mean);
            if (x <= 0 || cst <= 0) return 0.0;
            const double y = cst / x - 1.0;
            return y < 0 ? 0.0 : in.pdf(y) * cst / (x * x);
        }
        // f(x) = int (1 + y) f_N((1 + y) x) f_I(y) dy over the overlap of both supports.
        double ylo = in.lo();
        double yhi = in.hi();
        if (x > 0) {
            ylo = std::max(ylo, n.lo() / x - 1.0);
            yhi = std::min(yhi, n.hi() / x - 1.0);
        }
        if (!(yhi > ylo)) return 0.0;
        auto integrand = [&](double y) { return (1.0 + y) * n.pdf((1.0 + y) * x) * in.pdf(y); };
        return quad::integrate(integrand, ylo, yhi, inner_options(opt)).value;
    }

    template <class G>
    static double expect_of(const SinrComponent& c, G& g, const quad::Options& opt) {
        const auto& n = c.num;
        auto direct = [&](const GaussianSnr& law, auto&& h) {
            if (law.degenerate()) return h(std::max(0.0, law.mean));
            auto f = [&](double x) { return h(x) * law.pdf(x); };
            return quad::integrate(f, law.lo(), law.hi(), opt).value;
        };
        if (c.form == SinrComponent::Form::Direct) return direct(n, g);
        // Iterated form: outer over interference, inner over the numerator.
        return direct(c.interf, [&](double y) {
            return direct(n, [&](double v) { return g(v / (1.0 + y)); });
        });
    }

    static quad::Options inner_options(const quad::Options& opt) {
        quad::Options o = opt;
        o.abs_tol = std::min(opt.abs_tol, 1e-12);
        return o;
    }
};

// ---- analytic laws ---------------------------------------------------------

/// Moments of the SNR of a stream with power p on device u, given |h_hat_u|^2.
inline GaussianSnr stream_snr(const DeviceLink& d, double p, double h_hat_sq) {
    const double gbar = p * d.mean_snr_per_watt;
    return {gbar * h_hat_sq, 2.0 * gbar * gbar * h_hat_sq * d.sigma_e_sq};
}

/// SINR laws for every stream of the scheme, conditioned on |h_hat_u|^2.
inline PerStream<SinrComponent> sinr_components(const LinkBudget& lb, Scheme scheme, const PowerVector& p,
                                                std::array<double, 2> h_hat_sq) {
    using F = SinrComponent::Form;
    PerStream<SinrComponent> out;
    const auto& d1 = lb.dev[0];
    const auto& d2 = lb.dev[1];
    const GaussianSnr g2 = stream_snr(d2, p[StreamId::X2], h_hat_sq[1]);
    out[StreamId::X2] = {F::Direct, g2, {}};
    switch (scheme) {
    case Scheme::Rsma: {
        const GaussianSnr g11 = stream_snr(d1, p[StreamId::X11], h_hat_sq[0]);
        const GaussianSnr g12 = stream_snr(d1, p[StreamId::X12], h_hat_sq[0]);
        out[StreamId::X12] = {F::RatioOverOne, g12, g2};
        out[StreamId::X11] = {F::RatioOverOne, g11, sum_of(g12, g2)};
        break;
    }
    case Scheme::Noma:
        out[StreamId::X1] = {F::RatioOverOne, stream_snr(d1, p[StreamId::X1], h_hat_sq[0]), g2};
        break;
    case Scheme::Oma:
        out[StreamId::X1] = {F::Direct, stream_snr(d1, p[StreamId::X1], h_hat_sq[0]), {}};
        break;
    }
    return out;
}

/// Stratified |h_hat_u|^2 draws for the marginalized mode: exponential
/// quantiles with mean rho_u^2, device 2's strata shuffled by a fixed seed.
inline std::vector<std::array<double, 2>> h_hat_grid(const Scenario& s, const LinkBudget& lb) {
    std::vector<std::array<double, 2>> out;
    switch (s.h_hat.kind) {
    case HHatMode::Kind::MeanPower:
        out.push_back({lb.dev[0].rho_sq, lb.dev[1].rho_sq});
        break;
    case HHatMode::Kind::Fixed:
        out.push_back(s.h_hat.fixed_sq);
        break;
    case HHatMode::Kind::Marginalize: {
        const int k = s.h_hat.samples;
        std::vector<int> perm(k);
        for (int i = 0; i < k; ++i) perm[i] = i;
        std::mt19937_64 eng(s.shadow_seed ^ 0x9e3779b97f4a7c15ULL);
        std::shuffle(perm.begin(), perm.end(), eng);
        auto q = [k](int i) { return -std::log1p(-(i + 0.5) / k); };
        for (int i = 0; i < k; ++i)
            out.push_back({lb.dev[0].rho_sq * q(i), lb.dev[1].rho_sq * q(perm[i])});
        break;
    }
    }
    return out;
}

/// Per-stream SINR distributions for the scenario's h_hat mode.
inline PerStream<SinrDistribution> build_sinr_distributions(const Scenario& s, const LinkBudget& lb,
                                                            Scheme scheme, const PowerVector& p) {
    for (StreamId q : streams_of(scheme)) {
        if (!(p[q] >= 0) || p[q] > s.p_max_w * (1 + 1e-12)) throw DomainError("power outside [0, p_max]");
    }
    PerStream<std::vector<SinrComponent>> parts;
    for (const auto& h : h_hat_grid(s, lb)) {
        const auto comps = sinr_components(lb, scheme, p, h);
        for (StreamId q : streams_of(scheme)) parts[q].push_back(comps[q]);
    }
    PerStream<SinrDistribution> out;
    for (StreamId q : streams_of(scheme)) out[q] = SinrDistribution(std::move(parts[q]));
    return out;
}

inline PerStream<SinrDistribution> build_sinr_distributions(const Scenario& s, Scheme scheme, const PowerVector& p) {
    return build_sinr_distributions(s, derive_link_budget(s), scheme, p);
}

// ---- exact sampling --------------------------------------------------------

/// Draws h_u = h_hat_u + e_u per device and forms the SIC SINRs from the
/// true channel gains. Under MeanPower/Fixed the estimate is held at the
/// configured magnitude; under Marginalize it is redrawn each call.
class ExactSampler {
public:
    ExactSampler(const Scenario& s, const LinkBudget& lb, Scheme scheme, const PowerVector& p)
        : scheme_(scheme), p_(p), lb_(lb), kind_(s.h_hat.kind) {
        const auto grid = h_hat_grid(s, lb);
        if (kind_ != HHatMode::Kind::Marginalize) {
            h_hat_abs_ = {std::sqrt(grid[0][0]), std::sqrt(grid[0][1])};
        }
    }

    template <class Rng>
    PerStream<double> operator()(Rng& rng) const {
        std::normal_distribution<double> std_normal(0.0, 1.0);
        std::array<double, 2> gain{};
        for (int u = 0; u < 2; ++u) {
            const auto& d = lb_.dev[u];
            double re = 0.0;
            double im = 0.0;
            if (kind_ == HHatMode::Kind::Marginalize) {
                const double s = std::sqrt(d.rho_sq / 2.0);
                re = s * std_normal(rng);
                im = s * std_normal(rng);
            } else {
                re = h_hat_abs_[u];
            }
            const double se = std::sqrt(d.sigma_e_sq / 2.0);
            re += se * std_normal(rng);
            im += se * std_normal(rng);
            gain[u] = re * re + im * im;
        }
        return sinrs_from_gains(gain);
    }

    /// SIC SINRs for given true channel power gains |h_u|^2.
    PerStream<double> sinrs_from_gains(std::array<double, 2> gain) const {
        auto snr = [&](StreamId q) { return p_[q] * lb_.dev[device_of(q)].mean_snr_per_watt * gain[device_of(q)]; };
        PerStream<double> out;
        const double g2 = snr(StreamId::X2);
        out[StreamId::X2] = g2;
        switch (scheme_) {
        case Scheme::Rsma: {
            const double g12 = snr(StreamId::X12);
            out[StreamId::X12] = g12 / (g2 + 1.0);
            out[StreamId::X11] = snr(StreamId::X11) / (g12 + g2 + 1.0);
            break;
        }
        case Scheme::Noma: out[StreamId::X1] = snr(StreamId::X1) / (g2 + 1.0); break;
        case Scheme::Oma: out[StreamId::X1] = snr(StreamId::X1); break;
        }
        return out;
    }

private:
    Scheme scheme_;
    PowerVector p_;
    LinkBudget lb_;
    HHatMode::Kind kind_;
    std::array<double, 2> h_hat_abs_{};
};

/// Draws each stream's SNR independently from its Gaussian law (the analytic
/// model), then forms the same ratios.
class GaussianSampler {
public:
    explicit GaussianSampler(PerStream<SinrDistribution> laws, Scheme scheme)
        : laws_(std::move(laws)), scheme_(scheme) {}

    template <class Rng>
    PerStream<double> operator()(Rng& rng) const {
        PerStream<double> out;
        for (StreamId q : streams_of(scheme_)) out[q] = laws_[q].sample(rng);
        return out;
    }

private:
    PerStream<SinrDistribution> laws_;
    Scheme scheme_;
};

} // namespace rsma_sqp
