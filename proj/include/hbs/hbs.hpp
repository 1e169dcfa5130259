#pragma once

#include <hbs/bench.hpp>
#include <hbs/cluster_tree.hpp>
#include <hbs/compressor.hpp>
#include <hbs/error.hpp>
#include <hbs/factorization.hpp>
#include <hbs/io.hpp>
#include <hbs/linalg.hpp>
#include <hbs/operators.hpp>
#include <hbs/oracle.hpp>
