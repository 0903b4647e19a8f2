#pragma once

#include "l2c/errors.hpp"
#include "l2c/graph.hpp"
#include "l2c/separation.hpp"
#include "l2c/dataset.hpp"
#include "l2c/ci.hpp"
#include "l2c/partition.hpp"
#include "l2c/scm.hpp"
#include "l2c/local_discovery.hpp"
#include "l2c/cluster.hpp"
#include "l2c/metrics.hpp"
#include "l2c/reduction.hpp"
#include "l2c/calculus.hpp"
#include "l2c/estimate.hpp"
