#pragma once

#include "sigdetect/belief.hpp"
#include "sigdetect/common.hpp"
#include "sigdetect/counterexample.hpp"
#include "sigdetect/csv.hpp"
#include "sigdetect/dp.hpp"
#include "sigdetect/eval.hpp"
#include "sigdetect/io.hpp"
#include "sigdetect/parallel.hpp"
#include "sigdetect/policy.hpp"
#include "sigdetect/scenario.hpp"
#include "sigdetect/signaling.hpp"
