#pragma once

#include "strconf/descriptors.hpp"
#include "strconf/error.hpp"
#include "strconf/feature_table.hpp"
#include "strconf/gbdt.hpp"
#include "strconf/kmeans.hpp"
#include "strconf/metrics.hpp"
#include "strconf/pca.hpp"
#include "strconf/pipeline.hpp"
#include "strconf/trajectory_io.hpp"
