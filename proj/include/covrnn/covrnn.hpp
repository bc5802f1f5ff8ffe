#pragma once

#include "covrnn/coverage.hpp"
#include "covrnn/dataset.hpp"
#include "covrnn/error.hpp"
#include "covrnn/harness.hpp"
#include "covrnn/model.hpp"
#include "covrnn/mutation.hpp"
#include "covrnn/oracle.hpp"
#include "covrnn/report.hpp"
#include "covrnn/rng.hpp"
#include "covrnn/tensor.hpp"
