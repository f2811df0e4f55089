#pragma once

#include "acrotag/corpus.hpp"
#include "acrotag/crf.hpp"
#include "acrotag/disambig.hpp"
#include "acrotag/ensemble.hpp"
#include "acrotag/error.hpp"
#include "acrotag/eval.hpp"
#include "acrotag/features.hpp"
#include "acrotag/rulebased.hpp"
#include "acrotag/tags.hpp"
#include "acrotag/text.hpp"
