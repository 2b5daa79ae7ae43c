#pragma once

#include <doctest.h>

// doctest's Approx adds an absolute scale of 1 to the tolerance, which makes
// it useless for SI lengths. This one is purely relative.
inline doctest::Approx approx(double value) { return doctest::Approx(value).scale(0.0); }
