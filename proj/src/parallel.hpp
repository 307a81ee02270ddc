#pragma once

#include <exception>

namespace qepkit::detail {

// Carries the first exception out of an OpenMP region, which may not throw.
class ParallelErrors {
public:
    template <class F>
    void run(F&& body) noexcept {
        try {
            body();
        } catch (...) {
#pragma omp critical(qepkit_parallel_errors)
            if (!first_)
                first_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (first_)
            std::rethrow_exception(first_);
    }

private:
    std::exception_ptr first_;
};

}  // namespace qepkit::detail
