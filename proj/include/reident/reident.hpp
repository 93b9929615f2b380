#pragma once

#include "reident/aggregation.hpp"
#include "reident/chunking.hpp"
#include "reident/config.hpp"
#include "reident/corpus.hpp"
#include "reident/dense_rerank.hpp"
#include "reident/embeddings.hpp"
#include "reident/errors.hpp"
#include "reident/hashing.hpp"
#include "reident/http_backends.hpp"
#include "reident/infill.hpp"
#include "reident/io.hpp"
#include "reident/llm.hpp"
#include "reident/metrics.hpp"
#include "reident/ordering.hpp"
#include "reident/orchestrator.hpp"
#include "reident/pipeline.hpp"
#include "reident/sparse_index.hpp"
#include "reident/tokenize.hpp"
#include "reident/unicode.hpp"
