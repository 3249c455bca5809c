#pragma once

// Umbrella header for the whole measurement-and-verification engine.

#include "mv/common.hpp"
#include "mv/config.hpp"
#include "mv/csv.hpp"
#include "mv/data_quality.hpp"
#include "mv/evaluation.hpp"
#include "mv/feature_selection.hpp"
#include "mv/fit_ann.hpp"
#include "mv/fit_knn.hpp"
#include "mv/fit_ols.hpp"
#include "mv/fit_svr.hpp"
#include "mv/grid_search.hpp"
#include "mv/ingest.hpp"
#include "mv/manifest.hpp"
#include "mv/matrix.hpp"
#include "mv/model.hpp"
#include "mv/pipeline.hpp"
#include "mv/preprocess.hpp"
#include "mv/savings.hpp"
#include "mv/series.hpp"
#include "mv/stats.hpp"
#include "mv/tdist.hpp"
#include "mv/time.hpp"
