// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ttr/dense.hpp"
#include "ttr/experiments.hpp"
#include "ttr/io.hpp"
#include "ttr/linalg.hpp"
#include "ttr/network.hpp"
#include "ttr/random.hpp"
#include "ttr/rank_vector.hpp"
#include "ttr/tr.hpp"
#include "ttr/tt.hpp"
