#pragma once

#include "litesem/clustering.hpp"
#include "litesem/config.hpp"
#include "litesem/corpus.hpp"
#include "litesem/dispersion.hpp"
#include "litesem/embed.hpp"
#include "litesem/error.hpp"
#include "litesem/eval.hpp"
#include "litesem/graph.hpp"
#include "litesem/indexer.hpp"
#include "litesem/induction.hpp"
#include "litesem/persistence.hpp"
#include "litesem/retrieval.hpp"
#include "litesem/text.hpp"
