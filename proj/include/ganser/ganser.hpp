// Umbrella header.
#pragma once

#include "ganser/aae.hpp"
#include "ganser/checkpoint.hpp"
#include "ganser/cli.hpp"
#include "ganser/corpus.hpp"
#include "ganser/experiments.hpp"
#include "ganser/gan.hpp"
#include "ganser/gmm.hpp"
#include "ganser/gradcheck.hpp"
#include "ganser/losses.hpp"
#include "ganser/matrix.hpp"
#include "ganser/mlp.hpp"
#include "ganser/optimizer.hpp"
#include "ganser/rng.hpp"
#include "ganser/svm.hpp"
