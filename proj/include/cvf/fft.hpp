#ifndef CVF_FFT_HPP
#define CVF_FFT_HPP

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "cvf/grid.hpp"

namespace cvf {
namespace detail {

// Plans are cached for the process lifetime and created under a lock
// (FFTW plan creation is not thread-safe; execution on distinct buffers is).
// FFTW_ESTIMATE keeps the chosen algorithm independent of runtime timing,
// so repeated runs produce identical bits.
class FftPlans {
  public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    void execute(const GridSpec& spec, int sign, std::complex<double>* data) {
        fftw_plan plan = get(spec, sign);
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

  private:
    using Key = std::array<int, 4>;  // n0, n1, n2, sign

    fftw_plan get(const GridSpec& spec, int sign) {
        Key key = {spec.n[0], spec.n[1], spec.n[2], sign};
        std::lock_guard<std::mutex> lock(mu_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(spec.nodes());
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan;
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        if (spec.dim == 2)
            plan = fftw_plan_dft_2d(spec.n[0], spec.n[1], buf, buf, sign, flags);
        else
            plan = fftw_plan_dft_3d(spec.n[0], spec.n[1], spec.n[2], buf, buf, sign, flags);
        plans_[key] = plan;
        return plan;
    }

    std::mutex mu_;
    std::map<Key, fftw_plan> plans_;
};

}  // namespace detail

/// In-place forward DFT (unnormalized), row-major layout matching GridSpec.
inline void fft_forward(const GridSpec& spec, std::vector<std::complex<double>>& data) {
    detail::FftPlans::instance().execute(spec, FFTW_FORWARD, data.data());
}

/// In-place inverse DFT, normalized by 1/N.
inline void fft_inverse(const GridSpec& spec, std::vector<std::complex<double>>& data) {
    detail::FftPlans::instance().execute(spec, FFTW_BACKWARD, data.data());
    const double scale = 1.0 / double(spec.nodes());
    for (auto& z : data) z *= scale;
}

inline std::vector<std::complex<double>> to_complex(const std::vector<double>& v) {
    return std::vector<std::complex<double>>(v.begin(), v.end());
}

inline std::vector<double> real_part(const std::vector<std::complex<double>>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
    return r;
}

}  // namespace cvf

#endif
