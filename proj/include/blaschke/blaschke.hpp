#pragma once

#include "blaschke/connection.hpp"
#include "blaschke/convergence.hpp"
#include "blaschke/error.hpp"
#include "blaschke/expression.hpp"
#include "blaschke/factory.hpp"
#include "blaschke/frame.hpp"
#include "blaschke/grid.hpp"
#include "blaschke/oracle.hpp"
#include "blaschke/parallel.hpp"
#include "blaschke/pick.hpp"
#include "blaschke/pipeline.hpp"
#include "blaschke/realizability.hpp"
#include "blaschke/runfile.hpp"
