#pragma once

#include "rksd/bootstrap.hpp"
#include "rksd/common.hpp"
#include "rksd/contam.hpp"
#include "rksd/dataset.hpp"
#include "rksd/harness.hpp"
#include "rksd/hyptest.hpp"
#include "rksd/kef_fit.hpp"
#include "rksd/kernels.hpp"
#include "rksd/models.hpp"
#include "rksd/radius.hpp"
#include "rksd/rng.hpp"
#include "rksd/serialize.hpp"
#include "rksd/stein.hpp"
