#pragma once

#include "hypok/besov.hpp"
#include "hypok/check.hpp"
#include "hypok/extension.hpp"
#include "hypok/fractional.hpp"
#include "hypok/inequalities.hpp"
#include "hypok/kernel.hpp"
#include "hypok/linalg.hpp"
#include "hypok/operator.hpp"
#include "hypok/quadrature.hpp"
#include "hypok/rng.hpp"
#include "hypok/semigroup.hpp"
#include "hypok/testfuncs.hpp"
