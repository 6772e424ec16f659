#pragma once

/**
 * @file ratsos.hpp
 * @brief Umbrella header.
 */

#include "ratsos/error.hpp"
#include "ratsos/poly.hpp"
#include "ratsos/problem.hpp"
#include "ratsos/signsym.hpp"
#include "ratsos/corrsparse.hpp"
#include "ratsos/generators.hpp"
#include "ratsos/grid_oracle.hpp"
#include "ratsos/sdp.hpp"
#include "ratsos/relax.hpp"
#include "ratsos/sdpa_io.hpp"
#include "ratsos/pipeline.hpp"
