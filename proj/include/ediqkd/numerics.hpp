#pragma once

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_roots.h>

#include <functional>
#include <memory>
#include <vector>

#include "errors.hpp"

namespace ediqkd::numerics {

namespace detail {

inline void quiet_gsl() {
    static const bool once = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)once;
}

struct RootDeleter {
    void operator()(gsl_root_fsolver* s) const { gsl_root_fsolver_free(s); }
};
struct MinDeleter {
    void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct VecDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

} // namespace detail

// Bisection on a bracketing interval [lo, hi] until its width is below abs_tol.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double abs_tol) {
    detail::quiet_gsl();
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0) == (fhi < 0)) throw no_solution("bisect: interval does not bracket a root");

    gsl_function gf;
    gf.function = [](double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); };
    gf.params = const_cast<std::function<double(double)>*>(&f);
    std::unique_ptr<gsl_root_fsolver, detail::RootDeleter> s(gsl_root_fsolver_alloc(gsl_root_fsolver_bisection));
    gsl_root_fsolver_set(s.get(), &gf, lo, hi);
    for (int it = 0; it < 200; ++it) {
        gsl_root_fsolver_iterate(s.get());
        const double a = gsl_root_fsolver_x_lower(s.get()), b = gsl_root_fsolver_x_upper(s.get());
        if (gsl_root_test_interval(a, b, abs_tol, 0.0) == GSL_SUCCESS) break;
    }
    return gsl_root_fsolver_root(s.get());
}

struct MinimizeResult {
    std::vector<double> x;
    double value;
};

// Nelder-Mead simplex minimization (GSL nmsimplex2).
inline MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                                  const std::vector<double>& step, double size_tol = 1e-6, int max_iter = 400) {
    detail::quiet_gsl();
    const std::size_t n = x0.size();
    if (n == 0 || step.size() != n) throw domain_error("nelder_mead: bad dimensions");

    using Fn = std::function<double(const std::vector<double>&)>;
    gsl_multimin_function gf;
    gf.n = n;
    gf.params = const_cast<Fn*>(&f);
    gf.f = [](const gsl_vector* v, void* p) {
        std::vector<double> x(v->size);
        for (std::size_t k = 0; k < v->size; ++k) x[k] = gsl_vector_get(v, k);
        return (*static_cast<const Fn*>(p))(x);
    };

    std::unique_ptr<gsl_vector, detail::VecDeleter> x(gsl_vector_alloc(n)), ss(gsl_vector_alloc(n));
    for (std::size_t k = 0; k < n; ++k) {
        gsl_vector_set(x.get(), k, x0[k]);
        gsl_vector_set(ss.get(), k, step[k]);
    }
    std::unique_ptr<gsl_multimin_fminimizer, detail::MinDeleter> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
    gsl_multimin_fminimizer_set(s.get(), &gf, x.get(), ss.get());
    for (int it = 0; it < max_iter; ++it) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), size_tol) == GSL_SUCCESS) break;
    }
    MinimizeResult r;
    r.x.resize(n);
    for (std::size_t k = 0; k < n; ++k) r.x[k] = gsl_vector_get(s->x, k);
    r.value = s->fval;
    return r;
}

} // namespace ediqkd::numerics
