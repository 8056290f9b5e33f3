#pragma once

#include "kinit/matrix.hpp"
#include "kinit/random.hpp"
#include "kinit/dataset.hpp"
#include "kinit/kmeans.hpp"
#include "kinit/init.hpp"
#include "kinit/validity.hpp"
#include "kinit/synthgen.hpp"
#include "kinit/stats.hpp"
#include "kinit/experiment.hpp"
#include "kinit/report.hpp"
