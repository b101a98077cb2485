#ifndef SCCDGA_SCCDGA_HPP
#define SCCDGA_SCCDGA_HPP

#include "cellgraph.hpp"
#include "error.hpp"
#include "genegraph.hpp"
#include "ingest.hpp"
#include "kmeans.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "synthbench.hpp"
#include "tensor.hpp"

#endif
