#pragma once

#include "spraydot/error.hpp"
#include "spraydot/random.hpp"
#include "spraydot/parallel.hpp"
#include "spraydot/color.hpp"
#include "spraydot/image_io.hpp"
#include "spraydot/color_quant.hpp"
#include "spraydot/cluster.hpp"
#include "spraydot/nearest.hpp"
#include "spraydot/auc.hpp"
#include "spraydot/classify.hpp"
#include "spraydot/dots.hpp"
#include "spraydot/size_stats.hpp"
#include "spraydot/spatial.hpp"
#include "spraydot/uniformness.hpp"
#include "spraydot/svg.hpp"
#include "spraydot/plots.hpp"
#include "spraydot/synthetic.hpp"
#include "spraydot/pipeline.hpp"
