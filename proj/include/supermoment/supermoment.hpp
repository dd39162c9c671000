#pragma once

#include "supermoment/core.hpp"
#include "supermoment/ball.hpp"
#include "supermoment/random.hpp"
#include "supermoment/parallel.hpp"
#include "supermoment/kernels.hpp"
#include "supermoment/gauss.hpp"
#include "supermoment/quadrature.hpp"
#include "supermoment/star.hpp"
#include "supermoment/partitions.hpp"
#include "supermoment/moments.hpp"
#include "supermoment/simulator.hpp"
#include "supermoment/harnack.hpp"
