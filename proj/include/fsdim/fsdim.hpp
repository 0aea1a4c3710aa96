#pragma once

// Everything except the CLI front end, which pulls in CLI11.

#include "fsdim/census.hpp"
#include "fsdim/constructions.hpp"
#include "fsdim/digit_io.hpp"
#include "fsdim/digits.hpp"
#include "fsdim/entropy.hpp"
#include "fsdim/error.hpp"
#include "fsdim/experiments.hpp"
#include "fsdim/normality.hpp"
#include "fsdim/parallel.hpp"
#include "fsdim/polynomials.hpp"
#include "fsdim/primes.hpp"
#include "fsdim/sequences.hpp"
#include "fsdim/sources.hpp"
