#pragma once

// Umbrella header. The HTTP transport lives in parasynth/http_transport.hpp
// and is included separately since it pulls in cpp-httplib and TLS.

#include "parasynth/augmentation.hpp"
#include "parasynth/corpus_io.hpp"
#include "parasynth/diversity_metrics.hpp"
#include "parasynth/errors.hpp"
#include "parasynth/llm_provider.hpp"
#include "parasynth/pipeline.hpp"
#include "parasynth/prompt_engine.hpp"
#include "parasynth/response_parser.hpp"
#include "parasynth/text.hpp"
