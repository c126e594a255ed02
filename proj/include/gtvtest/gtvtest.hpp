#pragma once

#include "gtvtest/core_data.hpp"
#include "gtvtest/errors.hpp"
#include "gtvtest/graph.hpp"
#include "gtvtest/hypothesis.hpp"
#include "gtvtest/io.hpp"
#include "gtvtest/mincut.hpp"
#include "gtvtest/parallel.hpp"
#include "gtvtest/simulation.hpp"
#include "gtvtest/solver.hpp"
