#pragma once

#include "petwell/backend.hpp"
#include "petwell/corpus.hpp"
#include "petwell/faceclient.hpp"
#include "petwell/happiness.hpp"
#include "petwell/inference.hpp"
#include "petwell/petclass.hpp"
#include "petwell/pipeline.hpp"
#include "petwell/report.hpp"
#include "petwell/rng.hpp"
#include "petwell/sentiment.hpp"
#include "petwell/stats.hpp"
#include "petwell/synth.hpp"
#include "petwell/timeutil.hpp"
#include "petwell/version.hpp"
