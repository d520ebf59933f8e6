#pragma once

#include "framelens/common.hpp"
#include "framelens/linalg.hpp"
#include "framelens/lexicon.hpp"
#include "framelens/corpus.hpp"
#include "framelens/synthetic.hpp"
#include "framelens/encoder.hpp"
#include "framelens/sampler.hpp"
#include "framelens/objective.hpp"
#include "framelens/trainer.hpp"
#include "framelens/index.hpp"
#include "framelens/metrics.hpp"
#include "framelens/gradcheck.hpp"
