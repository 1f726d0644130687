#pragma once

#include "hdnet/csv.hpp"
#include "hdnet/data.hpp"
#include "hdnet/errors.hpp"
#include "hdnet/eval.hpp"
#include "hdnet/network.hpp"
#include "hdnet/parallel.hpp"
#include "hdnet/rng.hpp"
#include "hdnet/scaler.hpp"
#include "hdnet/trainer.hpp"
