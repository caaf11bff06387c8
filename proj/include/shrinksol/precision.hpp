#pragma once

// Widest convenient scalar for the separatrix bisection. Double roundoff in
// the seed coordinates decoheres shooting orbits near the connecting orbit
// (approach floor ~1e-2 at delta = 1e-6, independent of tolerance), so the
// bisection integrates in binary128 where available and falls back to the
// platform long double otherwise.

#if defined(SHRINKSOL_HAVE_FLOAT128)
#include <boost/multiprecision/float128.hpp>

namespace shrinksol {
using quad = boost::multiprecision::float128;
}
#else

namespace shrinksol {
using quad = long double;
}
#endif
