#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace nld::detail {

/// Process-wide cache of FFTW complex plans.
///
/// Plan creation is serialized (the FFTW planner is not thread-safe);
/// fftw_execute_dft on caller-owned arrays is safe to run concurrently.
/// FFTW_ESTIMATE keeps transforms deterministic run to run.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    void execute(std::complex<double>* data, int dim, int n0, int n1, int sign) {
        fftw_plan plan = get(dim, n0, n1, sign);
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

private:
    FftPlans() = default;
    ~FftPlans() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

    fftw_plan get(int dim, int n0, int n1, int sign) {
        const auto key = std::make_tuple(dim, n0, n1, sign);
        std::lock_guard lock(mu_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        const std::size_t total = dim == 1 ? static_cast<std::size_t>(n0)
                                           : static_cast<std::size_t>(n0) * n1;
        std::vector<std::complex<double>> scratch(total);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = dim == 1 ? fftw_plan_dft_1d(n0, buf, buf, sign, flags)
                                  : fftw_plan_dft_2d(n0, n1, buf, buf, sign, flags);
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mu_;
    std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

inline void dft_forward(std::vector<std::complex<double>>& data, int dim, int n) {
    FftPlans::instance().execute(data.data(), dim, n, dim == 2 ? n : 1, FFTW_FORWARD);
}

inline void dft_backward(std::vector<std::complex<double>>& data, int dim, int n) {
    FftPlans::instance().execute(data.data(), dim, n, dim == 2 ? n : 1, FFTW_BACKWARD);
}

} // namespace nld::detail
